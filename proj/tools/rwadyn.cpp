// Command-line front end: scenario runs, coupling sweeps, oracle
// comparisons, and the built-in smoke suite.  Exit codes: 0 success,
// 2 configuration error, 3 numeric failure, 4 invariant violation.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rwadyn/errors.hpp"
#include "rwadyn/scenario.hpp"

namespace {

std::optional<std::filesystem::path> as_override(const std::string& out) {
  if (out.empty()) return std::nullopt;
  return std::filesystem::path(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Exact and long-time reduced dynamics of multi-level systems coupled "
      "to structured non-vacuum reservoirs"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;

  CLI::App* simulate =
      app.add_subcommand("simulate", "run one scenario and write its artifacts");
  simulate->add_option("--config", config, "scenario file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", out_dir,
                       "output directory (overrides outputs.directory)");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "compare exact and semigroup dynamics across couplings");
  sweep->add_option("--config", config, "scenario file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir,
                    "output directory (overrides outputs.directory)");

  CLI::App* oracle = app.add_subcommand(
      "oracle-validate",
      "cross-check the exact run against a discretized reservoir");
  oracle->add_option("--config", config, "scenario file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  oracle->add_option("--out", out_dir,
                     "output directory (overrides outputs.directory)");

  CLI::App* check =
      app.add_subcommand("self-check", "run the built-in fixture suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      rwadyn::scenario::run_scenario(rwadyn::scenario::load_scenario(config),
                                     as_override(out_dir));
    } else if (sweep->parsed()) {
      rwadyn::scenario::sweep_lambda(rwadyn::scenario::load_scenario(config),
                                     as_override(out_dir));
    } else if (oracle->parsed()) {
      rwadyn::scenario::oracle_validate(
          rwadyn::scenario::load_scenario(config), as_override(out_dir));
    } else if (check->parsed()) {
      const int failures = rwadyn::scenario::self_check(std::cout);
      if (failures > 0) {
        std::cerr << "error: " << failures << " self-check failure(s)\n";
        return static_cast<int>(rwadyn::ExitClass::Numeric);
      }
    }
  } catch (const rwadyn::RwadynError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_class());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(rwadyn::ExitClass::Numeric);
  }
  return 0;
}
