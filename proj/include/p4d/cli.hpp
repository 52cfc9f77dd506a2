#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "p4d/block.hpp"
#include "p4d/cases.hpp"
#include "p4d/particle.hpp"
#include "p4d/timestep.hpp"

namespace p4d {

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,          // I/O and anything unexpected
  kExitConfig = 2,         // invalid configuration or case parameters
  kExitNewton = 3,         // nonlinear solver failure
  kExitLinear = 4,         // linear solver failure
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct OutputConfig {
  std::string dir = "out";
  bool mesh_vtk = false;
  int snapshot_every = 0;   // 0 = no snapshots
  bool pattern = false;     // dump block patterns of the first Jacobian
};

struct SweepConfig {
  int levels = 2;           // refinement levels r, 2r, 4r...
  bool compare_bj = true;   // refinement sweep runs BJ next to the configured kind
};

struct VerifyConfig {
  std::vector<std::size_t> sizes{11, 21, 41, 81};
  std::vector<double> theta_bars{0.5, 1.0};
  double min_order = 1.8;   // on the local truncation order
};

struct RunConfig {
  CaseOptions case_opts;
  std::size_t n_steps = 30;
  SolverConfig solver;
  OutputConfig output;
  SweepConfig sweep;
  VerifyConfig verify;
  int threads = 1;

  // unset values get case-dependent defaults in finalize()
  bool resolution_set = false;
  bool restart_set = false;
  bool n_c_set = false;
};

/// Parses a JSON document over `base`; unknown keys and bad values throw ConfigError.
RunConfig parse_config(const std::string& json_text, RunConfig base = {});
/// Fills case-dependent defaults and validates.
void finalize(RunConfig& cfg);
/// Full configuration with every default spelled out (JSON).
std::string resolved_config(const RunConfig& cfg);

/// Base configuration used by dump-pattern: P3D 3x3 mesh with N_c = 3.
RunConfig pattern_defaults();

struct OrderingOutcome {
  Ordering ordering;
  bool converged = false;
  int total_gmres = 0;
  int total_newton = 0;
  std::string message;
};

struct RefinementOutcome {
  std::size_t level = 0;
  std::array<std::size_t, 3> resolution{};
  PrecondKind kind = PrecondKind::BGS;
  bool converged = false;
  int total_gmres = 0;
  int total_newton = 0;
  std::string message;
};

struct ParticleVerification {
  std::vector<std::pair<double, ConvergenceStudy>> regular;  // theta_bar -> study
  ConvergenceStudy irregular;
  bool passed = false;
};

/// Builds the case, runs the transient from the equilibrium state.
TransientResult simulate(const RunConfig& cfg, std::ostream* log = nullptr,
                         const std::function<void(const StepReport&, const State&)>& on_step = {});

std::vector<OrderingOutcome> sweep_orderings(const RunConfig& cfg, std::ostream* log = nullptr);
std::vector<RefinementOutcome> sweep_refinement(const RunConfig& cfg, std::ostream* log = nullptr);
ParticleVerification verify_particle(const RunConfig& cfg);

int cmd_run(const RunConfig& cfg, std::ostream& log);
int cmd_sweep_orderings(const RunConfig& cfg, std::ostream& log);
int cmd_sweep_refinement(const RunConfig& cfg, std::ostream& log);
int cmd_verify_particle(const RunConfig& cfg, std::ostream& log);
int cmd_dump_pattern(const RunConfig& cfg, std::ostream& log);

/// Runs a command by name with config-file text (may be empty) and overrides;
/// maps exceptions to exit codes and prints diagnostics to `err`.
int run_command(const std::string& command, const std::string& config_text,
                const std::optional<std::string>& out_dir, std::optional<int> threads, std::ostream& log,
                std::ostream& err);

}  // namespace p4d
