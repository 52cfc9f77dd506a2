#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "p4d/assembly.hpp"
#include "p4d/block.hpp"
#include "p4d/gmres.hpp"

namespace p4d {

struct NewtonConfig {
  double rtol = 1e-8;
  double atol = 1e-10;  // in the scaled residual norm
  /// A residual within this multiple of the rounding bound eps*|J||u| (scaled)
  /// counts as converged once a full Newton step no longer reduces it.
  /// Matters only for very stiff collector rows.
  double floor_factor = 16.0;
  int max_iters = 50;
  bool backtracking = true;
  int max_halvings = 8;

  void validate() const;
};

struct SolverConfig {
  NewtonConfig newton;
  PreconditionerSpec precond;
  GmresOptions gmres;
};

enum class FailureKind { None, Newton, Linear };

struct NewtonReport {
  bool converged = false;
  FailureKind failure = FailureKind::None;
  std::string message;
  int iterations = 0;
  std::vector<int> gmres_iters;               // one per Newton iteration
  std::vector<double> residual_norms;         // scaled norm, R0 first
  std::vector<double> unscaled_norms;         // plain 2-norm, R0 first
  std::vector<std::vector<double>> gmres_histories;
  std::array<double, 4> field_scales{};
  bool at_rounding_floor = false;

  int gmres_total() const;
};

struct NewtonResult {
  State state;
  NewtonReport report;
};

/// 1C current of the mesh's electrode volumes (A, or A/m^k below 3D).
double reference_current(const ProblemSetup& setup);

/// Damped Newton for one backward-Euler step. Residual norms are in units of
/// the 1C current: potential rows divided by it, concentration rows times F.
NewtonResult newton_solve(const ProblemSetup& setup, const State& guess, const State& prev,
                          const SolverConfig& cfg);

/// Generic damped Newton used by the solver above and by tests on small
/// systems. `assemble(u, R, J)` fills R and optionally J (J may be null);
/// `solve(J, rhs, x)` returns GMRES-style statistics.
struct NewtonCallbacks {
  std::function<void(const std::vector<double>& u, std::vector<double>& R, bool want_jacobian)> assemble;
  std::function<GmresResult(const std::vector<double>& rhs, std::vector<double>& x)> solve;
  std::function<double(const std::vector<double>& R)> norm;
  /// Rounding floor of the residual at the last Jacobian point (scaled norm); optional.
  std::function<double()> floor;
};

NewtonReport damped_newton(std::vector<double>& u, const NewtonCallbacks& cb, const NewtonConfig& cfg);

struct StepReport {
  std::size_t step = 0;
  double time = 0.0;
  int newton_iters = 0;
  std::vector<int> gmres_iters;
  std::vector<double> residual_norms;
  double residual_final = 0.0;
  double voltage = 0.0;
  double i_app = 0.0;
  double cathode_current = 0.0;
  double anode_current = 0.0;
  Inventory inventory;
  std::array<double, 2> stoichiometry{};
  double min_surface_theta = 0.0;
  double max_surface_theta = 0.0;
  double wall_time = 0.0;
  std::vector<std::vector<double>> gmres_histories;

  int gmres_total() const;
};

struct TransientResult {
  std::vector<StepReport> steps;
  State state;
  bool ok = true;
  FailureKind failure = FailureKind::None;
  std::string message;
  StepReport initial;  // observables at t = 0
};

/// Fixed-step backward Euler from `initial`, warm-starting every step.
/// `on_step` (optional) sees each accepted step. Failures stop the run and
/// keep the steps done so far.
TransientResult run_transient(const ProblemSetup& setup, const State& initial, std::size_t n_steps,
                              const SolverConfig& cfg,
                              const std::function<void(const StepReport&, const State&)>& on_step = {});

/// Observables of a state (step/time/solver fields left at zero).
StepReport observe(const ProblemSetup& setup, const State& u);

}  // namespace p4d
