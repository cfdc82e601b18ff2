#pragma once
// Scenario configuration and orchestration: parses a JSON run description,
// drives the exact / semigroup / discrete-bath computations, and emits the
// CSV and JSON artifacts the command-line front end promises.

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwadyn/model.hpp"
#include "rwadyn/oracle.hpp"
#include "rwadyn/reduced.hpp"

namespace rwadyn::scenario {

// Fully validated run description.  Every cross-field invariant that can be
// checked without running the solver has been checked by the time a value
// of this type exists.
struct Scenario {
  std::string name = "scenario";
  model::SystemHamiltonian system{Eigen::MatrixXcd::Zero(1, 1)};
  // Bare coupling density; the coupling strength from the bvh section (its
  // first entry, for single runs) enters squared as a multiplier.
  model::SpectralDensity bath = model::SpectralDensity::lorentzian(1.0, 0.0, 1.0);
  model::InitialState initial;
  reduced::EvolveOptions solver;

  bool has_bvh = false;
  std::vector<double> couplings;  // lambda values, positive
  double tau_min = 1.0;
  double tau_max = 5.0;
  double tau_step = 0.1;

  bool oracle_enabled = false;
  oracle::DiscretizeOptions oracle_opt;

  std::filesystem::path out_dir = "out";

  // Coupling strength applied to a single run: first bvh entry, or 1 when
  // the section is absent (the density is then used as configured).
  double run_coupling() const {
    return has_bvh && !couplings.empty() ? couplings.front() : 1.0;
  }
};

// Parses and validates a configuration document.  Throws ConfigError with
// the offending field path on any structural problem.
Scenario parse_scenario(const std::string& json_text,
                        const std::string& default_name = "scenario");
Scenario load_scenario(const std::filesystem::path& config_path);

struct RunOutcome {
  std::filesystem::path trajectory_csv;
  std::filesystem::path summary_path;
  std::filesystem::path validation_path;
  std::filesystem::path oracle_csv;  // empty unless the oracle ran
  nlohmann::ordered_json summary;
  nlohmann::ordered_json validation;
};

// Full single run: exact evolution, invariant screening of every output
// row, optional long-time comparison against the semigroup stationary
// block, optional discretized-reservoir cross-check.  Deterministic: a
// rerun of the same scenario produces byte-identical files.
RunOutcome run_scenario(const Scenario& sc,
                        const std::optional<std::filesystem::path>& out_override = {});

struct SweepRow {
  double coupling = 0.0;
  double resolvent_error = 0.0;       // E
  double resolvent_error_rel = 0.0;   // E / lambda^2
  double state_distance = 0.0;        // D, sup over the rescaled-time grid
  double state_distance_rel = 0.0;    // D / lambda^2
};

struct SweepResult {
  std::vector<SweepRow> rows;
  // Monotonicity verdicts; absent (nullopt) for a single-row table.
  std::optional<bool> resolvent_rel_decreasing;
  std::optional<bool> state_rel_decreasing;
  std::filesystem::path table_csv;
  std::filesystem::path table_path;
  nlohmann::ordered_json table;
};

// Coupling sweep over bvh.lambda: for each value, the exact dynamics is run
// to laboratory horizon tau_max / lambda^2 and compared with the semigroup
// form on the rescaled-time grid; E measures the resolvent gap, D the block
// state distance (rotating frame on both sides).
SweepResult sweep_lambda(const Scenario& sc,
                         const std::optional<std::filesystem::path>& out_override = {});

struct OracleComparison {
  std::filesystem::path table_csv;
  std::filesystem::path summary_path;
  nlohmann::ordered_json summary;
  double max_trace_distance = 0.0;
  double compared_up_to = 0.0;  // min(horizon, recurrence_time / 2)
};

// Exact run versus the discretized-reservoir reference, compared at every
// output time inside the trustworthy half of the recurrence horizon.
OracleComparison oracle_validate(const Scenario& sc,
                                 const std::optional<std::filesystem::path>& out_override = {});

// Built-in fixture suite for installation checks; prints one line per check
// to `out` and returns the number of failures.
int self_check(std::ostream& out);

// Log verbosity from RWADYN_LOG: quiet = 0, info = 1 (default), debug = 2.
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace rwadyn::scenario
