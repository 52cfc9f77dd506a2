#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "p4d/assembly.hpp"
#include "p4d/mesh.hpp"

namespace p4d {

enum class CaseId { I, II, III, IV };

const char* to_string(CaseId c);
CaseId parse_case_id(const std::string& s);

enum class CurrentProfile { Gaussian, Uniform };

/// Everything that selects and sizes a benchmark problem.
struct CaseOptions {
  CaseId id = CaseId::I;
  int dim = 3;                                   // 1 and 2 supported for Cases I/II
  std::array<std::size_t, 3> resolution{12, 12, 12};  // cells along x (through-cell), y, z
  std::size_t n_c = 10;
  double theta_bar = 0.5;
  double dt = 60.0;
  double c_rate = 1.0;
  CurrentProfile profile = CurrentProfile::Gaussian;  // Case I only; II-IV are uniform
  std::uint64_t seed = 1;
  double h_c = 0.0;           // Case II filter length; 0 = largest box side / 8
  // Case III
  std::array<double, 2> extent_yz{1e-2, 1e-1};
  std::array<double, 2> tab{5e-3, 10e-3};      // tab size along y and z
  bool full_face_tabs = false;
  // Case IV
  std::array<double, 3> box{1e-3, 1e-3, 0.5e-3};
  double gyroid_thickness = 1.104;
};

/// Applied-current density on every facet of `patch` (A/m^2), normalized so
/// the facet quadrature integrates to `I_app`. Spreads are fractions of the
/// patch extent, centred on the patch; `uniform` ignores them.
std::vector<double> gaussian_applied_current(const StructuredMesh& mesh, const FacetPatch& patch,
                                             double I_app, double spread_fraction, bool uniform);

struct RandomFieldSpec {
  double h_c = 0.0;            // 0 = largest box side / 8
  std::uint64_t seed = 1;
  // (mean, variance) for eps_s and eps_b per electrode
  std::array<double, 2> anode_eps_s{0.6, 0.004};
  std::array<double, 2> anode_eps_b{0.1, 0.0001};
  std::array<double, 2> cathode_eps_s{0.5, 0.004};
  std::array<double, 2> cathode_eps_b{0.2, 0.0001};
};

struct VolumeFractions {
  std::vector<double> eps_s, eps_b, eps;  // cellwise
};

/// Matern-type fields: coarse N(0,1) samples, trilinear interpolation, the
/// filter (I - h_c^2 lap) g~ = g with natural boundary conditions, then exact
/// per-electrode rescaling to the requested mean and variance.
VolumeFractions random_volume_fractions(const StructuredMesh& mesh, const RandomFieldSpec& spec);

/// Smoothed nodal field from white noise, exposed for tests. `raw` receives the
/// unfiltered interpolant when non-null.
std::vector<double> filtered_gaussian_field(const StructuredMesh& mesh, double h_c, std::uint64_t seed,
                                            std::vector<double>* raw = nullptr);

/// Filter solve alone: (M + h_c^2 K) g~ = M g.
std::vector<double> helmholtz_filter(const StructuredMesh& mesh, const std::vector<double>& g, double h_c);

/// Standard normals from mt19937_64 via Box-Muller; uniforms are (x >> 11) * 2^-53.
class NormalSampler {
public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}
  double next();

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Builds and prepares a benchmark problem.
ProblemSetup make_case(const CaseOptions& opt);

/// Signed applied current for the case (negative = discharge).
double case_current(const CaseOptions& opt);

}  // namespace p4d
