#include "p4d/params.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace p4d {

namespace {

// a * tanh((theta - center) / width)
struct TanhTerm {
  double a;
  double center;
  double width;
};

constexpr std::array<TanhTerm, 8> kAnodeTanh{{
    {0.0351, 0.286, 0.083},
    {-0.0045, 0.849, 0.119},
    {-0.035, 0.9233, 0.05},
    {-0.0147, 0.5, 0.034},
    {-0.102, 0.194, 0.142},
    {-0.022, 0.9, 0.0164},
    {-0.011, 0.124, 0.0226},
    {0.0155, 0.105, 0.029},
}};

// a * tanh(p + q * theta_tilde)
struct LinearTanhTerm {
  double a;
  double p;
  double q;
};

constexpr std::array<LinearTanhTerm, 6> kCathodeTanh{{
    {0.07645, 30.834, -54.4806},
    {2.1581, 52.294, -50.294},
    {-0.14169, 11.0923, -19.8543},
    {0.2051, 1.4684, -5.4888},
    {0.2531, 0.56478 / 0.1316, -1.0 / 0.1316},
    {-0.02167, -0.525 / 0.006, 1.0 / 0.006},
}};

constexpr double kCathodeStretch = 1.062;

double anode_ocp(double th) {
  double u = 0.194 + 1.5 * std::exp(-120.0 * th);
  for (const auto& t : kAnodeTanh) u += t.a * std::tanh((th - t.center) / t.width);
  return u;
}

double anode_ocp_slope(double th) {
  double du = -180.0 * std::exp(-120.0 * th);
  for (const auto& t : kAnodeTanh) {
    const double s = std::tanh((th - t.center) / t.width);
    du += t.a * (1.0 - s * s) / t.width;
  }
  return du;
}

double cathode_ocp(double th) {
  const double x = kCathodeStretch * th;
  double u = 2.16216;
  for (const auto& t : kCathodeTanh) u += t.a * std::tanh(t.p + t.q * x);
  return u;
}

double cathode_ocp_slope(double th) {
  const double x = kCathodeStretch * th;
  double du = 0.0;
  for (const auto& t : kCathodeTanh) {
    const double s = std::tanh(t.p + t.q * x);
    du += t.a * (1.0 - s * s) * t.q;
  }
  return du * kCathodeStretch;
}

void check_theta(double theta) {
  if (!(theta > 0.0 && theta < 1.0))
    throw DomainError("stoichiometry outside (0,1): " + std::to_string(theta));
}

// exp(x) continued linearly for x > cap; returns value and slope.
ValueAndSlope capped_exp(double x, double cap) {
  if (x <= cap) {
    const double e = std::exp(x);
    return {e, e};
  }
  const double e = std::exp(cap);
  return {e * (1.0 + (x - cap)), e};
}

void check_electrode(const ElectrodeParams& e, const char* name) {
  const std::string n(name);
  if (std::abs(e.alpha_a + e.alpha_c - 1.0) > 1e-12)
    throw std::invalid_argument(n + ": alpha_a + alpha_c must equal 1");
  if (!(e.cs_0 > 0.0 && e.cs_0 < e.cs_max))
    throw std::invalid_argument(n + ": require 0 < cs_0 < cs_max");
  if (e.eps_s + e.eps + e.eps_b > 1.0 + 1e-12)
    throw std::invalid_argument(n + ": volume fractions exceed 1");
  if (!(e.R_s > 0.0)) throw std::invalid_argument(n + ": particle radius must be positive");
  if (!(e.D_s > 0.0)) throw std::invalid_argument(n + ": D_s must be positive");
}

}  // namespace

ElectrodeParams default_anode() {
  ElectrodeParams e;
  e.eps_s = 0.6;
  e.eps = 0.3;
  e.eps_b = 0.1;
  e.sigma = 100.0;
  e.k = 2e-5;
  e.alpha_a = 0.5;
  e.alpha_c = 0.5;
  e.cs_max = 2.5e4;
  e.cs_0 = 2.0e4;
  e.a = 1.8e5;
  e.D_s = 3.9e-14;
  e.R_s = 1e-5;
  e.ocp = OcpCurve::AnodeGraphite;
  return e;
}

ElectrodeParams default_cathode() {
  ElectrodeParams e;
  e.eps_s = 0.5;
  e.eps = 0.3;
  e.eps_b = 0.2;
  e.sigma = 10.0;
  e.k = 6e-7;
  e.alpha_a = 0.5;
  e.alpha_c = 0.5;
  e.cs_max = 5.12e4;
  e.cs_0 = 3.07e4;
  e.a = 1.5e5;
  e.D_s = 1e-13;
  e.R_s = 1e-5;
  e.ocp = OcpCurve::CathodeLco;
  return e;
}

CellModel default_cell_model() {
  CellModel m;
  m.anode = default_anode();
  m.cathode = default_cathode();
  return m;
}

void CellModel::validate() const {
  check_electrode(anode, "anode");
  check_electrode(cathode, "cathode");
  if (!(electrolyte.t_plus > 0.0 && electrolyte.t_plus < 1.0))
    throw std::invalid_argument("transference number must lie in (0,1)");
  if (!(electrolyte.ce_0 > 0.0)) throw std::invalid_argument("ce_0 must be positive");
  if (!(constants.T > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (c_rate < 0.0) throw std::invalid_argument("c_rate must be non-negative");
}

double ocp(OcpCurve curve, double theta) {
  check_theta(theta);
  return curve == OcpCurve::AnodeGraphite ? anode_ocp(theta) : cathode_ocp(theta);
}

double ocp_derivative(OcpCurve curve, double theta) {
  check_theta(theta);
  return curve == OcpCurve::AnodeGraphite ? anode_ocp_slope(theta) : cathode_ocp_slope(theta);
}

double ocp_clamped(OcpCurve curve, double theta, double delta) {
  return ocp(curve, std::clamp(theta, delta, 1.0 - delta));
}

double ocp_derivative_clamped(OcpCurve curve, double theta, double delta) {
  if (theta < delta || theta > 1.0 - delta) return 0.0;
  return ocp_derivative(curve, theta);
}

ValueAndSlope electrolyte_diffusivity(double ce, double T) {
  constexpr double kActivation = 37040.0;
  constexpr double kGas = 8.31446;
  const double arrhenius = std::exp(kActivation / kGas * (1.0 / 298.15 - 1.0 / T));
  const double v = 5.34e-10 * std::exp(-0.65 * ce / 1000.0) * arrhenius;
  return {v, -0.65e-3 * v};
}

ValueAndSlope electrolyte_conductivity(double ce, double T) {
  constexpr double kActivation = 34700.0;
  constexpr double kGas = 8.31446;
  const double arrhenius = std::exp(kActivation / kGas * (1.0 / 298.15 - 1.0 / T));
  const double c = ce / 1000.0;
  const double poly = 0.0911 + 1.9101 * c - 1.052 * c * c + 0.1554 * c * c * c;
  const double dpoly = 1.9101 - 2.0 * 1.052 * c + 3.0 * 0.1554 * c * c;
  return {arrhenius * poly, arrhenius * dpoly / 1000.0};
}

double effective_transport(double bulk, double fraction, double b, double floor) {
  return std::max(bulk * std::pow(fraction, b), floor);
}

ExchangeCurrent exchange_current(double k, double ce, double cs_surf, double cs_max,
                                 double alpha_a, double alpha_c) {
  const double free = cs_max - cs_surf;
  if (ce <= 0.0 || cs_surf <= 0.0 || free <= 0.0) return {0.0, 0.0, 0.0};
  const double ce_a = std::pow(ce, alpha_a);
  const double free_a = std::pow(free, alpha_a);
  const double cs_c = std::pow(cs_surf, alpha_c);
  const double i0 = k * ce_a * free_a * cs_c;
  return {i0, i0 * alpha_a / ce, i0 * (alpha_c / cs_surf - alpha_a / free)};
}

ButlerVolmer butler_volmer(double i0, double eta, const Constants& c, double alpha_a,
                           double alpha_c, double cap) {
  const double f = c.f_over_rt();
  const auto fwd = capped_exp(alpha_a * f * eta, cap);
  const auto bwd = capped_exp(-alpha_c * f * eta, cap);
  return {i0 * (fwd.value - bwd.value), i0 * f * (alpha_a * fwd.slope + alpha_c * bwd.slope)};
}

Capacity cell_capacity_and_current(const CellModel& model, double V_n, double V_p) {
  if (!(V_n > 0.0 && V_p > 0.0)) throw std::invalid_argument("electrode volumes must be positive");
  const double to_ah = model.constants.F / 3600.0;
  Capacity cap{};
  cap.Q_n = to_ah * model.anode.eps_s * V_n * model.anode.cs_max;
  cap.Q_p = to_ah * model.cathode.eps_s * V_p * model.cathode.cs_max;
  cap.Q = std::min(cap.Q_n, cap.Q_p);
  cap.I_app = model.c_rate * cap.Q;
  return cap;
}

}  // namespace p4d
