#pragma once

#include <stdexcept>
#include <string>

namespace p4d {

/// Thrown when a constitutive law is evaluated outside its domain.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

struct Constants {
  double F = 96485.33;  // C/mol
  double R = 8.31446;   // J/mol/K
  double T = 298.15;    // K

  double f_over_rt() const { return F / (R * T); }
};

enum class OcpCurve { AnodeGraphite, CathodeLco };

struct ElectrodeParams {
  double eps_s = 0.0;
  double eps = 0.0;
  double eps_b = 0.0;
  double sigma = 0.0;      // S/m
  double k = 0.0;          // A/m^2 (m^3/mol)^1.5
  double alpha_a = 0.5;
  double alpha_c = 0.5;
  double cs_max = 0.0;     // mol/m^3
  double cs_0 = 0.0;       // mol/m^3
  double a = 0.0;          // m^2/m^3
  double D_s = 0.0;        // m^2/s
  double R_s = 0.0;        // m
  OcpCurve ocp = OcpCurve::AnodeGraphite;

  double theta_0() const { return cs_0 / cs_max; }
};

struct ElectrolyteParams {
  double ce_0 = 1000.0;
  double t_plus = 0.4;
  double b = 1.5;
  double separator_porosity = 1.0;
};

struct CollectorParams {
  double sigma_al = 3.77e7;
  double sigma_cu = 5.96e7;
};

/// Regularization constants for the whole-domain formulation.
struct Regularization {
  double sigma_eff_floor = 1e-22;     // S/m, separator solid conductivity
  double collector_porosity = 1e-4;
  double collector_transport = 1e-22; // D_e^eff and kappa^eff inside collectors
  double cs_clamp_delta = 1e-6;       // relative to cs_max
  double ce_clamp_rel = 1e-6;         // relative to ce_0
  double bv_exponent_cap = 40.0;
};

struct CellModel {
  Constants constants;
  ElectrodeParams anode;
  ElectrodeParams cathode;
  ElectrolyteParams electrolyte;
  CollectorParams collectors;
  Regularization regularization;
  double c_rate = 1.0;

  /// Throws std::invalid_argument when a parameter invariant is violated.
  void validate() const;
};

/// Graphite/LCO parameter set (Marquis et al. values as distributed with PyBaMM).
CellModel default_cell_model();
ElectrodeParams default_anode();
ElectrodeParams default_cathode();

// ---- constitutive laws -----------------------------------------------------

/// Open-circuit potential. Throws DomainError unless 0 < theta < 1.
double ocp(OcpCurve curve, double theta);
double ocp_derivative(OcpCurve curve, double theta);

/// Same as ocp() but evaluates at theta clamped into [delta, 1 - delta].
/// Used inside Newton iterations where trial states may overshoot.
double ocp_clamped(OcpCurve curve, double theta, double delta);
double ocp_derivative_clamped(OcpCurve curve, double theta, double delta);

struct ValueAndSlope {
  double value;
  double slope;
};

ValueAndSlope electrolyte_diffusivity(double ce, double T);
ValueAndSlope electrolyte_conductivity(double ce, double T);

/// bulk * fraction^b, floored at `floor`.
double effective_transport(double bulk, double fraction, double b, double floor = 0.0);

struct ExchangeCurrent {
  double i0;
  double d_ce;
  double d_cs;
};

/// i0 = k ce^aa (cs_max - cs)^aa cs^ac. Zero at both stoichiometry extremes.
ExchangeCurrent exchange_current(double k, double ce, double cs_surf, double cs_max,
                                 double alpha_a, double alpha_c);

struct ButlerVolmer {
  double i_n;
  double d_eta;
};

/// i0 [exp(aa F eta / RT) - exp(-ac F eta / RT)], each exponential continued
/// linearly beyond |exponent| = cap.
ButlerVolmer butler_volmer(double i0, double eta, const Constants& c, double alpha_a,
                           double alpha_c, double cap = 40.0);

struct Capacity {
  double Q_n;   // Ah
  double Q_p;   // Ah
  double Q;     // Ah
  double I_app; // A
};

Capacity cell_capacity_and_current(const CellModel& model, double V_n, double V_p);

}  // namespace p4d
