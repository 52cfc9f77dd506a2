#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "p4d/block.hpp"
#include "p4d/mesh.hpp"
#include "p4d/params.hpp"
#include "p4d/particle.hpp"

namespace p4d {

/// Unknowns (phi_s, phi_e, c_e nodal; c_s per cell and radial node) in one flat vector.
using State = BlockVector;

/// Constant per-cell coefficients derived from labels and volume fractions.
struct CellCoeffs {
  Subdomain label = Subdomain::Separator;
  int electrode = -1;        // 0 anode, 1 cathode, -1 elsewhere
  double eps = 1.0;          // porosity
  double eps_s = 0.0;
  double brug = 1.0;         // eps^b; unused in collectors
  double sigma_eff = 0.0;
  double a = 0.0;
  bool collector = false;

  bool reactive() const { return electrode >= 0 && a > 0.0; }
};

struct ParticleModel {
  RadialGrid grid;
  ParticleOperator op;
  std::vector<double> weights;  // conservative r^2 dr weights
};

/// Everything needed to assemble one time step. Fill the inputs, then call prepare().
struct ProblemSetup {
  // inputs
  StructuredMesh mesh;          // labels set; patches named by gamma_p / gamma_n
  CellModel model;
  std::vector<double> eps_s, eps_b;  // cellwise; empty = table values
  std::size_t n_c = 10;
  double theta_bar = 0.5;
  double dt = 60.0;
  std::string gamma_p = "gamma_p";
  std::string gamma_n = "gamma_n";
  /// Applied current density per facet of gamma_p (A/m^2). Signed: the
  /// integral equals the cathode reaction integral, negative on discharge.
  std::vector<double> i_app;

  // derived by prepare()
  std::vector<CellCoeffs> cells;
  std::array<ParticleModel, 2> particles;
  std::vector<std::size_t> ground_nodes;
  BlockLayout layout;

  void prepare();
  /// Discrete integral of i_app over gamma_p (A).
  double applied_current() const;
  const ElectrodeParams& electrode(int e) const { return e == 0 ? model.anode : model.cathode; }
};

/// Assembler with precomputed sparsity patterns. Not thread safe.
class Assembler {
public:
  explicit Assembler(const ProblemSetup& setup);

  const ProblemSetup& setup() const { return *setup_; }

  /// Residual at u with backward-Euler history u_old.
  void residual(const State& u, const State& u_old, BlockVector& R) const;
  /// Analytic Jacobian at u. J must come from allocate_jacobian().
  void jacobian(const State& u, BlockMatrix& J) const;
  /// Both at once (one kinetics evaluation).
  void residual_and_jacobian(const State& u, const State& u_old, BlockVector& R, BlockMatrix& J) const;

  BlockMatrix allocate_jacobian() const;

private:
  void assemble(const State& u, const State* u_old, BlockVector* R, BlockMatrix* J) const;

  const ProblemSetup* setup_;
  int nn_ = 0;  // nodes per cell
  // reference element, indexed [q][a] and [q][a][axis]
  std::vector<std::vector<double>> N_;
  std::vector<std::vector<std::array<double, 3>>> dN_;
  std::vector<double> qw_;  // reference weights, sum 1

  BlockMatrix pattern_;
  std::vector<std::size_t> pos_full_;     // cell * nn^2 + a * nn + b
  std::vector<std::size_t> pos_react_;    // same, reactive cells only
  std::vector<std::size_t> pos_x_cs_;     // cell * nn + a: nodal row a, surface column
  std::vector<std::size_t> pos_cs_x_;     // cell * nn + b: surface row, nodal column b
  std::vector<std::size_t> pos_cs_cs_;    // cell * 3n_c: (sub, diag, super) per radial row
};

/// Convenience wrappers building a fresh Assembler.
BlockVector assemble_residual(const ProblemSetup& setup, const State& u, const State& u_old);
BlockMatrix assemble_jacobian(const ProblemSetup& setup, const State& u);

/// Rest state: phi_e = -U_n(theta_n0), phi_s = 0 on the negative side and
/// U_p(theta_p0) - U_n(theta_n0) on the positive side, c_e = ce_0, c_s = cs_0.
State equilibrium_state(const ProblemSetup& setup);

/// Area-weighted mean of phi_s over gamma_p (gamma_n is grounded).
double cell_voltage(const ProblemSetup& setup, const State& u);

/// Quadrature sum of a * i_n over cells carrying `region`.
double reaction_current(const ProblemSetup& setup, const State& u, Subdomain region);

struct Inventory {
  double electrolyte_mol = 0.0;
  double solid_mol = 0.0;
  double total_mol = 0.0;
};

Inventory lithium_inventory(const ProblemSetup& setup, const State& u);

/// Mean stoichiometry of the solid phase in each electrode (anode, cathode).
std::array<double, 2> mean_stoichiometry(const ProblemSetup& setup, const State& u);

/// Number of clamped evaluations (surface stoichiometry or c_e) since start.
std::size_t clamp_warning_count();

}  // namespace p4d
