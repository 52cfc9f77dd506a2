#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "p4d/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"P4D battery solver: whole-domain DFN with block-preconditioned Newton-Krylov"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  int threads = 0;
  const char* names[][2] = {
      {"run", "Run a galvanostatic discharge and write timeseries.csv / stats.jsonl"},
      {"sweep-orderings", "Run all 24 block Gauss-Seidel orderings"},
      {"sweep-refinement", "Run resolutions r, 2r, ... and report GMRES growth"},
      {"verify-particle", "Manufactured-solution convergence study of the radial scheme"},
      {"dump-pattern", "Write per-block sparsity patterns of one Jacobian"},
  };
  for (const auto& n : names) {
    CLI::App* sub = app.add_subcommand(n[0], n[1]);
    sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--threads", threads, "OpenMP threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory");
  }
  app.footer("Exit codes: 0 ok, 1 I/O or other error, 2 configuration error, 3 Newton failure, 4 linear solver failure");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : p4d::kExitConfig;
  }

  std::string text;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "error: cannot read " << config_path << '\n';
      return p4d::kExitError;
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return p4d::run_command(command, text, out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir),
                          threads > 0 ? std::optional<int>(threads) : std::nullopt, std::cout, std::cerr);
}
