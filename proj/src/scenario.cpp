#include "rwadyn/scenario.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <variant>

#include "rwadyn/bvh.hpp"
#include "rwadyn/errors.hpp"
#include "rwadyn/kernels.hpp"
#include "rwadyn/linalg.hpp"
#include "rwadyn/volterra.hpp"

namespace rwadyn::scenario {

namespace {

using Complex = std::complex<double>;
using json = nlohmann::ordered_json;

// --- logging ---------------------------------------------------------------

int read_log_level() {
  const char* env = std::getenv("RWADYN_LOG");
  if (env == nullptr) return 1;
  const std::string v(env);
  if (v == "quiet" || v == "0") return 0;
  if (v == "debug" || v == "2") return 2;
  return 1;
}

// --- config access helpers -------------------------------------------------

const json& need(const json& j, const char* key, const std::string& path) {
  if (!j.is_object())
    throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(path + "." + key, "missing required field");
  return *it;
}

double need_number(const json& j, const char* key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number())
    throw ConfigError(path + "." + key, "expected a number");
  return v.get<double>();
}

double opt_number(const json& j, const char* key, const std::string& path,
                  double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number())
    throw ConfigError(path + "." + key, "expected a number");
  return v.get<double>();
}

bool opt_bool(const json& j, const char* key, const std::string& path,
              bool fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean())
    throw ConfigError(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string need_string(const json& j, const char* key,
                        const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_string())
    throw ConfigError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

// Rejects unrecognized keys so a typo cannot silently fall back to a
// default.
void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& path) {
  if (!j.is_object()) return;
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) { known = true; break; }
    if (!known)
      throw ConfigError(path + "." + it.key(), "unknown field");
  }
}

Complex parse_complex(const json& v, const std::string& path) {
  if (v.is_number()) return Complex(v.get<double>(), 0.0);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number())
    throw ConfigError(path, "complex entries are [re, im] pairs");
  return Complex(v[0].get<double>(), v[1].get<double>());
}

Eigen::MatrixXcd parse_complex_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty())
    throw ConfigError(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXcd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array())
      throw ConfigError(path, "row " + std::to_string(r) + " is not an array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    }
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(path, "rows have inconsistent lengths");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = parse_complex(row[static_cast<std::size_t>(c)],
                              path + "[" + std::to_string(r) + "][" +
                                  std::to_string(c) + "]");
  }
  return m;
}

Eigen::VectorXd parse_real_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty())
    throw ConfigError(path, "expected a non-empty array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ConfigError(path + "[" + std::to_string(i) + "]",
                        "expected a number");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

model::SpectralDensity parse_bath(const json& j) {
  const std::string family = need_string(j, "family", "bath");
  try {
    if (family == "lorentzian") {
      check_keys(j, {"family", "kappa", "omega0", "gamma"}, "bath");
      return model::SpectralDensity::lorentzian(
          need_number(j, "kappa", "bath"), need_number(j, "omega0", "bath"),
          need_number(j, "gamma", "bath"));
    }
    if (family == "flat") {
      check_keys(j, {"family", "height", "lo", "hi"}, "bath");
      return model::SpectralDensity::flat_window(
          need_number(j, "height", "bath"), need_number(j, "lo", "bath"),
          need_number(j, "hi", "bath"));
    }
    if (family == "tabulated") {
      check_keys(j, {"family", "grid", "values"}, "bath");
      return model::SpectralDensity::tabulated(
          parse_real_vector(need(j, "grid", "bath"), "bath.grid"),
          parse_real_vector(need(j, "values", "bath"), "bath.values"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const RwadynError& e) {
    throw ConfigError("bath", e.what());
  }
  throw ConfigError("bath.family",
                    "unknown family '" + family +
                        "' (expected lorentzian, flat, or tabulated)");
}

model::ReservoirOccupation parse_occupation(const json& j,
                                            Eigen::Index levels) {
  const std::string family = need_string(j, "family", "occupation");
  try {
    if (family == "zero") {
      check_keys(j, {"family"}, "occupation");
      return model::OccupationProfile::zero();
    }
    if (family == "gaussian") {
      check_keys(j, {"family", "amplitude", "center", "sigma"}, "occupation");
      return model::OccupationProfile::gaussian(
          need_number(j, "amplitude", "occupation"),
          need_number(j, "center", "occupation"),
          need_number(j, "sigma", "occupation"));
    }
    if (family == "window") {
      check_keys(j, {"family", "height", "lo", "hi"}, "occupation");
      return model::OccupationProfile::window(
          need_number(j, "height", "occupation"),
          need_number(j, "lo", "occupation"),
          need_number(j, "hi", "occupation"));
    }
    if (family == "tabulated") {
      check_keys(j, {"family", "grid", "values"}, "occupation");
      return model::OccupationProfile::tabulated(
          parse_real_vector(need(j, "grid", "occupation"), "occupation.grid"),
          parse_real_vector(need(j, "values", "occupation"),
                            "occupation.values"));
    }
    if (family == "grid") {
      check_keys(j, {"family", "grid", "rho", "dk", "n_reservoirs"},
                 "occupation");
      model::GeneralGridOccupation occ;
      occ.grid = parse_real_vector(need(j, "grid", "occupation"),
                                   "occupation.grid");
      occ.rho = parse_complex_matrix(need(j, "rho", "occupation"),
                                     "occupation.rho");
      occ.dk = need_number(j, "dk", "occupation");
      occ.n_reservoirs =
          static_cast<int>(need_number(j, "n_reservoirs", "occupation"));
      if (occ.n_reservoirs != static_cast<int>(levels))
        throw ConfigError("occupation.n_reservoirs",
                          "must equal the number of system levels");
      try {
        model::validate_occupation(occ);
      } catch (const RwadynError& e) {
        throw ConfigError("occupation.rho", e.what());
      }
      return occ;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const RwadynError& e) {
    throw ConfigError("occupation", e.what());
  }
  throw ConfigError(
      "occupation.family",
      "unknown family '" + family +
          "' (expected zero, gaussian, window, tabulated, or grid)");
}

// --- matrix serialization ---------------------------------------------------

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json matrix_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(complex_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- CSV rendering ----------------------------------------------------------

void append_number(std::string& out, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

std::string trajectory_header(Eigen::Index levels) {
  std::string h = "t,rho00";
  for (Eigen::Index k = 1; k <= levels; ++k) {
    h += ",rho0e_" + std::to_string(k) + "_re";
    h += ",rho0e_" + std::to_string(k) + "_im";
  }
  for (Eigen::Index j = 1; j <= levels; ++j)
    for (Eigen::Index k = 1; k <= levels; ++k) {
      h += ",rhoee_" + std::to_string(j) + std::to_string(k) + "_re";
      h += ",rhoee_" + std::to_string(j) + std::to_string(k) + "_im";
    }
  h += ",trace_residual,min_eig";
  return h;
}

std::string trajectory_row(const model::BlockDensityMatrix& s) {
  std::string row;
  row.reserve(64 + static_cast<std::size_t>(s.levels() * (s.levels() + 1)) * 40);
  append_number(row, s.t);
  row += ',';
  append_number(row, s.rho00);
  for (Eigen::Index k = 0; k < s.levels(); ++k) {
    row += ',';
    append_number(row, s.rho0e[k].real());
    row += ',';
    append_number(row, s.rho0e[k].imag());
  }
  for (Eigen::Index j = 0; j < s.levels(); ++j)
    for (Eigen::Index k = 0; k < s.levels(); ++k) {
      row += ',';
      append_number(row, s.rhoee(j, k).real());
      row += ',';
      append_number(row, s.rhoee(j, k).imag());
    }
  row += ',';
  append_number(row, s.trace_residual());
  row += ',';
  append_number(row, s.min_eigenvalue());
  return row;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("outputs.directory",
                      "cannot open " + path.string() + " for writing");
  out << text;
  if (!out)
    throw ConfigError("outputs.directory", "write failed: " + path.string());
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// --- shared computation pieces ---------------------------------------------

kernels::CorrelationKernel make_correlation(const model::SpectralDensity& coupled,
                                            const model::ReservoirOccupation& occ,
                                            Eigen::Index levels) {
  if (const auto* prof = std::get_if<model::OccupationProfile>(&occ))
    return kernels::CorrelationKernel::diagonal(
        kernels::NonvacuumDensity(coupled, *prof), levels);
  return kernels::CorrelationKernel::general(
      coupled, std::get<model::GeneralGridOccupation>(occ));
}

// Trace distance restricted to the excited blocks.
double excited_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return linalg::trace_distance(a, b);
}

struct OracleTable {
  oracle::DiscreteBath bath;
  double compared_up_to = 0.0;
  double max_distance = 0.0;
  std::string csv;
  json meta;
};

OracleTable compare_with_oracle(const Scenario& sc,
                                const reduced::StateSeries& series,
                                double lam) {
  const auto* prof =
      std::get_if<model::OccupationProfile>(&sc.initial.occupation);
  const model::OccupationProfile coverage_profile =
      prof != nullptr ? *prof : model::OccupationProfile::zero();
  OracleTable out;
  out.bath = oracle::discretize_bath(sc.bath, coverage_profile, sc.oracle_opt);
  const oracle::DiscreteBathOracle brute(sc.system, out.bath, lam);
  out.compared_up_to =
      std::min(series.horizon, 0.5 * out.bath.recurrence_time);

  out.csv = "t,trace_distance\n";
  for (const auto& s : series.states) {
    if (s.t > out.compared_up_to + 1e-12) break;
    const double d =
        model::block_trace_distance(s, brute.reduced_state(sc.initial, s.t));
    out.max_distance = std::max(out.max_distance, d);
    std::string row;
    append_number(row, s.t);
    row += ',';
    append_number(row, d);
    row += '\n';
    out.csv += row;
  }

  out.meta = json{{"modes", static_cast<int>(out.bath.frequencies.size())},
                  {"window", json::array({out.bath.window_lo, out.bath.window_hi})},
                  {"dimension", static_cast<int>(brute.dimension())},
                  {"recurrence_time", out.bath.recurrence_time},
                  {"coupling_coverage", out.bath.coupling_coverage},
                  {"occupied_coverage", out.bath.occupied_coverage},
                  {"compared_up_to", out.compared_up_to},
                  {"max_trace_distance", out.max_distance}};
  return out;
}

}  // namespace

int log_level() {
  static const int level = read_log_level();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[rwadyn] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[rwadyn] " << msg << "\n";
}

// --- parsing ----------------------------------------------------------------

Scenario parse_scenario(const std::string& json_text,
                        const std::string& default_name) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object())
    throw ConfigError("config", "top level must be an object");
  check_keys(doc,
             {"name", "system", "bath", "occupation", "initial", "solver",
              "bvh", "oracle", "outputs"},
             "config");

  Scenario sc;
  sc.name = default_name;
  if (doc.contains("name")) {
    if (!doc.at("name").is_string())
      throw ConfigError("name", "expected a string");
    sc.name = doc.at("name").get<std::string>();
  }

  // system
  {
    const json& j = need(doc, "system", "config");
    check_keys(j, {"hamiltonian"}, "system");
    const Eigen::MatrixXcd h =
        parse_complex_matrix(need(j, "hamiltonian", "system"),
                             "system.hamiltonian");
    if (h.rows() != h.cols())
      throw ConfigError("system.hamiltonian", "must be square");
    try {
      sc.system = model::SystemHamiltonian(h);
    } catch (const RwadynError& e) {
      throw ConfigError("system.hamiltonian", e.what());
    }
  }
  const Eigen::Index n = sc.system.levels();

  sc.bath = parse_bath(need(doc, "bath", "config"));

  if (doc.contains("occupation"))
    sc.initial.occupation = parse_occupation(doc.at("occupation"), n);
  else
    sc.initial.occupation = model::OccupationProfile::zero();

  // initial
  {
    const json& j = need(doc, "initial", "config");
    check_keys(j, {"p", "sigma"}, "initial");
    sc.initial.p = need_number(j, "p", "initial");
    if (!(sc.initial.p >= 0.0 && sc.initial.p <= 1.0))
      throw ConfigError("initial.p", "mixing weight must lie in [0, 1]");
    sc.initial.sigma =
        parse_complex_matrix(need(j, "sigma", "initial"), "initial.sigma");
    if (sc.initial.sigma.rows() != n + 1 || sc.initial.sigma.cols() != n + 1)
      throw ConfigError("initial.sigma",
                        "must be (N+1) x (N+1) for N = " + std::to_string(n) +
                            " system levels");
    try {
      model::validate_initial_state(sc.initial, n);
    } catch (const RwadynError& e) {
      throw ConfigError("initial.sigma", e.what());
    }
  }

  // solver
  {
    const json& j = need(doc, "solver", "config");
    check_keys(j,
               {"step", "horizon", "output_stride", "lag_cutoff",
                "base_panels", "refine_check", "refine_tol"},
               "solver");
    sc.solver.step = need_number(j, "step", "solver");
    if (!(sc.solver.step > 0.0))
      throw ConfigError("solver.step", "must be positive");
    sc.solver.horizon = need_number(j, "horizon", "solver");
    if (!(sc.solver.horizon > 0.0))
      throw ConfigError("solver.horizon", "must be positive");
    const double steps = sc.solver.horizon / sc.solver.step;
    const auto n_steps = static_cast<long long>(std::llround(steps));
    if (n_steps < 1 || std::abs(steps - static_cast<double>(n_steps)) >
                           1e-6 * std::max(1.0, steps))
      throw ConfigError("solver.horizon",
                        "must be an integer multiple of the step");
    const double stride_raw = opt_number(j, "output_stride", "solver", 1.0);
    const auto stride = static_cast<long long>(std::llround(stride_raw));
    if (stride < 1 || std::abs(stride_raw - static_cast<double>(stride)) > 0)
      throw ConfigError("solver.output_stride",
                        "must be a positive integer");
    if (n_steps % stride != 0)
      throw ConfigError("solver.output_stride",
                        "must divide the step count " +
                            std::to_string(n_steps));
    if (n_steps / stride + 1 > 2'000'000)
      throw ConfigError("solver.output_stride",
                        "run would emit more than 2e6 rows; raise the stride");
    sc.solver.output_stride = static_cast<Eigen::Index>(stride);
    sc.solver.lag_cutoff = opt_number(j, "lag_cutoff", "solver", 1e-15);
    sc.solver.base_panels =
        static_cast<int>(opt_number(j, "base_panels", "solver", 24.0));
    if (sc.solver.base_panels < 1)
      throw ConfigError("solver.base_panels", "must be at least 1");
    sc.solver.refine_check = opt_bool(j, "refine_check", "solver", true);
    sc.solver.refine_tol = opt_number(j, "refine_tol", "solver", 1e-4);
  }

  // bvh
  if (doc.contains("bvh")) {
    const json& j = doc.at("bvh");
    check_keys(j, {"lambdas", "tau_min", "tau_max", "tau_step"}, "bvh");
    sc.has_bvh = true;
    const json& lam = need(j, "lambdas", "bvh");
    if (!lam.is_array() || lam.empty())
      throw ConfigError("bvh.lambdas",
                        "expected a non-empty array of coupling strengths");
    for (std::size_t i = 0; i < lam.size(); ++i) {
      if (!lam[i].is_number() || !(lam[i].get<double>() > 0.0))
        throw ConfigError("bvh.lambdas", "entries must be positive numbers");
      sc.couplings.push_back(lam[i].get<double>());
    }
    sc.tau_min = opt_number(j, "tau_min", "bvh", 1.0);
    sc.tau_max = opt_number(j, "tau_max", "bvh", 5.0);
    sc.tau_step = opt_number(j, "tau_step", "bvh", 0.1);
    if (!(sc.tau_step > 0.0))
      throw ConfigError("bvh.tau_step", "must be positive");
    if (!(sc.tau_min >= 0.0))
      throw ConfigError("bvh.tau_min", "must be nonnegative");
    if (!(sc.tau_max >= sc.tau_min))
      throw ConfigError("bvh.tau_max", "must be at least tau_min");
  }

  // oracle
  if (doc.contains("oracle")) {
    const json& j = doc.at("oracle");
    check_keys(j, {"enabled", "modes", "window", "occupied_coverage_min"},
               "oracle");
    sc.oracle_enabled = opt_bool(j, "enabled", "oracle", false);
    if (sc.oracle_enabled) {
      sc.oracle_opt.modes =
          static_cast<int>(need_number(j, "modes", "oracle"));
      if (sc.oracle_opt.modes < 1)
        throw ConfigError("oracle.modes", "must be at least 1");
      const json& w = need(j, "window", "oracle");
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() ||
          !w[1].is_number())
        throw ConfigError("oracle.window", "expected [lo, hi]");
      sc.oracle_opt.window_lo = w[0].get<double>();
      sc.oracle_opt.window_hi = w[1].get<double>();
      if (!(sc.oracle_opt.window_hi > sc.oracle_opt.window_lo))
        throw ConfigError("oracle.window", "needs hi > lo");
      sc.oracle_opt.occupied_coverage_min =
          opt_number(j, "occupied_coverage_min", "oracle", 0.999);
    }
  }

  // outputs
  if (doc.contains("outputs")) {
    const json& j = doc.at("outputs");
    check_keys(j, {"directory"}, "outputs");
    const std::string dir = need_string(j, "directory", "outputs");
    if (dir.empty())
      throw ConfigError("outputs.directory", "must not be empty");
    sc.out_dir = dir;
  }

  return sc;
}

Scenario load_scenario(const std::filesystem::path& config_path) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in)
    throw ConfigError("config", "cannot read " + config_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), config_path.stem().string());
}

// --- single run -------------------------------------------------------------

RunOutcome run_scenario(const Scenario& sc,
                        const std::optional<std::filesystem::path>& out_override) {
  const std::filesystem::path dir = out_override.value_or(sc.out_dir);
  std::filesystem::create_directories(dir);

  const Eigen::Index n = sc.system.levels();
  const double lam = sc.run_coupling();
  const double c2 = lam * lam;
  const model::SpectralDensity coupled = sc.bath.scaled(c2);
  const kernels::MemoryKernel kernel =
      kernels::MemoryKernel::from_density(coupled);
  const kernels::CorrelationKernel correlation =
      make_correlation(coupled, sc.initial.occupation, n);

  // Semigroup pieces first: they are cheap and catch hypothesis violations
  // before the long integration starts.
  std::vector<std::string> notes;
  std::optional<bvh::Generator> gen;
  std::optional<Eigen::MatrixXcd> stationary;
  if (sc.has_bvh) {
    const kernels::MemoryKernel bare =
        kernels::MemoryKernel::from_density(sc.bath);
    gen = bvh::build_generator(sc.system, bare, lam,
                               bare.vanishing() ? bvh::HypothesisCheck::warn
                                                : bvh::HypothesisCheck::strict);
    const auto* prof =
        std::get_if<model::OccupationProfile>(&sc.initial.occupation);
    if (prof == nullptr) {
      notes.push_back(
          "stationary comparison skipped: grid occupations carry no smooth "
          "frequency profile");
    } else if (bare.vanishing()) {
      stationary = Eigen::MatrixXcd::Zero(n, n);
    } else {
      stationary = bvh::stationary_excited_block(
          *gen, kernels::NonvacuumDensity(sc.bath, *prof));
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const reduced::StateSeries series =
      reduced::evolve_exact(sc.initial, sc.system, kernel, correlation,
                            sc.solver);
  log_debug("exact evolution: " + std::to_string(series.states.size()) +
            " outputs in " + std::to_string(seconds_since(t0)) + " s");

  RunOutcome out;
  out.trajectory_csv = dir / "trajectory.csv";
  {
    std::string csv = trajectory_header(n) + "\n";
    for (const auto& s : series.states) csv += trajectory_row(s) + "\n";
    write_text(out.trajectory_csv, csv);
    log_info("wrote " + out.trajectory_csv.string() + " (" +
             std::to_string(series.states.size()) + " rows)");
  }

  // validation report: every row is screened; failures are listed, never
  // dropped.
  constexpr double kTraceTol = 1e-9;
  constexpr double kEigTol = -1e-7;
  json violations = json::array();
  for (const auto& s : series.states) {
    const double tr = s.trace_residual();
    const double me = s.min_eigenvalue();
    if (tr > kTraceTol || me < kEigTol)
      violations.push_back(json{
          {"t", s.t}, {"trace_residual", tr}, {"min_eig", me}});
  }
  out.validation = json{
      {"thresholds",
       json{{"trace_residual", kTraceTol}, {"min_eig", kEigTol}}},
      {"rows", static_cast<int>(series.states.size())},
      {"max_trace_residual", series.max_trace_residual},
      {"min_eigenvalue", series.min_eigenvalue},
      {"refine_check", sc.solver.refine_check},
      {"refine_deviation", series.refine_deviation},
      {"violations", violations},
      {"valid", violations.empty()}};

  out.summary = json{{"scenario", sc.name},
                     {"levels", static_cast<int>(n)},
                     {"coupling", lam},
                     {"solver", json{{"step", sc.solver.step},
                                     {"horizon", sc.solver.horizon},
                                     {"output_stride",
                                      static_cast<long long>(
                                          sc.solver.output_stride)}}},
                     {"sign_convention", reduced::kInflowSignConvention},
                     {"rows", static_cast<int>(series.states.size())}};
  {
    const auto& last = series.states.back();
    out.summary["final"] =
        json{{"t", last.t},
             {"rho00", last.rho00},
             {"excited_trace", last.rhoee.trace().real()}};
  }

  if (stationary.has_value()) {
    // Tail average of the exact excited block over the final tenth of the
    // horizon, against the semigroup's long-time value (1-p) Y.
    const double tail_start = 0.9 * series.horizon - 1e-9 * series.horizon;
    Eigen::MatrixXcd avg = Eigen::MatrixXcd::Zero(n, n);
    int samples = 0;
    for (const auto& s : series.states)
      if (s.t >= tail_start) {
        avg += s.rhoee;
        ++samples;
      }
    if (samples > 0) avg /= static_cast<double>(samples);
    const model::BlockDensityMatrix asym =
        bvh::asymptotic_blocks(sc.initial, *stationary);
    const double d = excited_distance(avg, asym.rhoee);
    out.summary["stationary"] =
        json{{"coupling", lam},
             {"tail_fraction", 0.1},
             {"tail_samples", samples},
             {"excited_tail_average", matrix_json(avg)},
             {"excited_semigroup", matrix_json(asym.rhoee)},
             {"trace_distance", d}};
  }

  if (sc.oracle_enabled) {
    const auto t1 = std::chrono::steady_clock::now();
    const OracleTable table = compare_with_oracle(sc, series, lam);
    log_debug("oracle comparison in " + std::to_string(seconds_since(t1)) +
              " s");
    out.oracle_csv = dir / "oracle.csv";
    write_text(out.oracle_csv, table.csv);
    log_info("wrote " + out.oracle_csv.string());
    out.summary["oracle"] = table.meta;
  }

  if (!notes.empty()) out.summary["notes"] = notes;

  out.summary_path = dir / "summary.json";
  out.validation_path = dir / "validation.json";
  write_json_file(out.summary_path, out.summary);
  write_json_file(out.validation_path, out.validation);
  log_info("wrote " + out.summary_path.string() + ", " +
           out.validation_path.string());
  return out;
}

// --- coupling sweep ---------------------------------------------------------

SweepResult sweep_lambda(const Scenario& sc,
                         const std::optional<std::filesystem::path>& out_override) {
  if (!sc.has_bvh || sc.couplings.empty())
    throw ConfigError("bvh.lambdas",
                      "sweep needs a non-empty list of coupling strengths");
  for (std::size_t i = 1; i < sc.couplings.size(); ++i)
    if (!(sc.couplings[i] < sc.couplings[i - 1]))
      throw ConfigError("bvh.lambdas",
                        "sweep list must be strictly descending");
  const auto* prof =
      std::get_if<model::OccupationProfile>(&sc.initial.occupation);
  if (prof == nullptr)
    throw ConfigError("occupation.family",
                      "sweep comparison needs a diagonal occupation profile");

  const Eigen::Index n = sc.system.levels();
  const kernels::MemoryKernel bare =
      kernels::MemoryKernel::from_density(sc.bath);
  const bool vanishing = bare.vanishing();
  const double h = sc.solver.step;

  // Rescaled comparison grid tau_min..tau_max in steps of tau_step.
  const auto k_min = static_cast<long long>(std::llround(sc.tau_min / sc.tau_step));
  const auto k_max = static_cast<long long>(std::llround(sc.tau_max / sc.tau_step));
  if (std::abs(static_cast<double>(k_min) * sc.tau_step - sc.tau_min) > 1e-9 ||
      std::abs(static_cast<double>(k_max) * sc.tau_step - sc.tau_max) > 1e-9)
    throw ConfigError("bvh.tau_step",
                      "tau_min and tau_max must be multiples of tau_step");
  std::vector<double> taus;
  for (long long k = k_min; k <= k_max; ++k)
    taus.push_back(static_cast<double>(k) * sc.tau_step);
  if (taus.empty())
    throw ConfigError("bvh.tau_max", "empty rescaled comparison grid");

  SweepResult result;
  for (const double lam : sc.couplings) {
    const double c2 = lam * lam;
    const double horizon = sc.tau_max / c2;
    const double steps_raw = horizon / h;
    const auto n_steps = static_cast<long long>(std::llround(steps_raw));
    if (n_steps < 1 ||
        std::abs(steps_raw - static_cast<double>(n_steps)) > 1e-6)
      throw ConfigError("bvh.tau_max",
                        "rescaled horizon tau_max / lambda^2 must be an "
                        "integer multiple of the solver step");
    if (n_steps + 1 > 2'000'000)
      throw ConfigError("bvh.tau_max",
                        "sweep at coupling " + std::to_string(lam) +
                            " needs " + std::to_string(n_steps) +
                            " samples; raise the step or shrink tau_max");
    const double stride_raw = sc.tau_step / (c2 * h);
    const auto stride = static_cast<long long>(std::llround(stride_raw));
    if (stride < 1 ||
        std::abs(stride_raw - static_cast<double>(stride)) > 1e-6)
      throw ConfigError("bvh.tau_step",
                        "rescaled output grid tau_step / (lambda^2 h) must "
                        "be a whole number of solver steps");

    const auto t0 = std::chrono::steady_clock::now();
    const model::SpectralDensity coupled = sc.bath.scaled(c2);
    const kernels::MemoryKernel kernel =
        kernels::MemoryKernel::from_density(coupled);
    const volterra::ResolventTrajectory traj = volterra::solve_resolvent(
        sc.system, kernel, {h, horizon, sc.solver.lag_cutoff});
    const bvh::Generator gen = bvh::build_generator(
        sc.system, bare, lam,
        vanishing ? bvh::HypothesisCheck::warn : bvh::HypothesisCheck::strict);

    SweepRow row;
    row.coupling = lam;
    row.resolvent_error = bvh::resolvent_asymptotic_error(traj, gen, lam, taus);
    row.resolvent_error_rel = row.resolvent_error / c2;

    Eigen::MatrixXcd stationary = Eigen::MatrixXcd::Zero(n, n);
    if (!vanishing && !prof->is_zero())
      stationary = bvh::stationary_excited_block(
          gen, kernels::NonvacuumDensity(sc.bath, *prof));

    reduced::EvolveOptions opt = sc.solver;
    opt.horizon = horizon;
    opt.output_stride = static_cast<Eigen::Index>(stride);
    // The sweep reads absolute block distances at the 1e-2 lambda^2 scale;
    // the oscillatory-transient refinement alarm is meaningless there, but
    // the frequency grid is kept fine enough for the distances reported.
    opt.refine_check = false;
    opt.base_panels = std::max(sc.solver.base_panels, 48);
    const kernels::CorrelationKernel correlation =
        make_correlation(coupled, sc.initial.occupation, n);
    const reduced::StateSeries series = reduced::evolve_on_trajectory(
        sc.initial, sc.system, traj, correlation, opt);

    for (long long k = k_min; k <= k_max; ++k) {
      const double tau = static_cast<double>(k) * sc.tau_step;
      const auto& exact = series.states.at(static_cast<std::size_t>(k));
      const model::BlockDensityMatrix rotated =
          bvh::interaction_frame(exact, sc.system);
      const model::BlockDensityMatrix semi =
          bvh::semigroup_blocks(gen, sc.initial, stationary, tau);
      row.state_distance = std::max(
          row.state_distance, model::block_trace_distance(rotated, semi));
    }
    row.state_distance_rel = row.state_distance / c2;
    result.rows.push_back(row);
    log_debug("sweep lambda=" + std::to_string(lam) + ": E=" +
              std::to_string(row.resolvent_error) + " D=" +
              std::to_string(row.state_distance) + " in " +
              std::to_string(seconds_since(t0)) + " s");
  }

  if (result.rows.size() >= 2) {
    bool e_dec = true;
    bool d_dec = true;
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
      e_dec = e_dec && result.rows[i].resolvent_error_rel <
                           result.rows[i - 1].resolvent_error_rel;
      d_dec = d_dec && result.rows[i].state_distance_rel <
                           result.rows[i - 1].state_distance_rel;
    }
    result.resolvent_rel_decreasing = e_dec;
    result.state_rel_decreasing = d_dec;
  }

  const std::filesystem::path dir = out_override.value_or(sc.out_dir);
  std::filesystem::create_directories(dir);
  std::string csv = "lambda,E,E_over_lambda2,D,D_over_lambda2\n";
  json rows = json::array();
  for (const auto& r : result.rows) {
    std::string line;
    append_number(line, r.coupling);
    line += ',';
    append_number(line, r.resolvent_error);
    line += ',';
    append_number(line, r.resolvent_error_rel);
    line += ',';
    append_number(line, r.state_distance);
    line += ',';
    append_number(line, r.state_distance_rel);
    csv += line + "\n";
    rows.push_back(json{{"lambda", r.coupling},
                        {"E", r.resolvent_error},
                        {"E_over_lambda2", r.resolvent_error_rel},
                        {"D", r.state_distance},
                        {"D_over_lambda2", r.state_distance_rel}});
  }
  result.table = json{{"scenario", sc.name},
                      {"tau_grid", json{{"min", sc.tau_min},
                                        {"max", sc.tau_max},
                                        {"step", sc.tau_step}}},
                      {"rows", rows}};
  if (result.resolvent_rel_decreasing.has_value()) {
    result.table["E_over_lambda2_strictly_decreasing"] =
        *result.resolvent_rel_decreasing;
    result.table["D_over_lambda2_strictly_decreasing"] =
        *result.state_rel_decreasing;
  }

  result.table_csv = dir / "sweep.csv";
  result.table_path = dir / "sweep.json";
  write_text(result.table_csv, csv);
  write_json_file(result.table_path, result.table);
  log_info("wrote " + result.table_csv.string() + ", " +
           result.table_path.string());
  return result;
}

// --- oracle validation ------------------------------------------------------

OracleComparison oracle_validate(const Scenario& sc,
                                 const std::optional<std::filesystem::path>& out_override) {
  if (!sc.oracle_enabled)
    throw ConfigError("oracle.enabled",
                      "oracle-validate needs oracle.enabled = true");
  const Eigen::Index n = sc.system.levels();
  const double lam = sc.run_coupling();
  const model::SpectralDensity coupled = sc.bath.scaled(lam * lam);
  const kernels::MemoryKernel kernel =
      kernels::MemoryKernel::from_density(coupled);
  const kernels::CorrelationKernel correlation =
      make_correlation(coupled, sc.initial.occupation, n);
  const reduced::StateSeries series =
      reduced::evolve_exact(sc.initial, sc.system, kernel, correlation,
                            sc.solver);
  const OracleTable table = compare_with_oracle(sc, series, lam);

  const std::filesystem::path dir = out_override.value_or(sc.out_dir);
  std::filesystem::create_directories(dir);
  OracleComparison out;
  out.table_csv = dir / "oracle.csv";
  out.summary_path = dir / "oracle_summary.json";
  out.max_trace_distance = table.max_distance;
  out.compared_up_to = table.compared_up_to;
  out.summary = json{{"scenario", sc.name},
                     {"coupling", lam},
                     {"solver", json{{"step", sc.solver.step},
                                     {"horizon", sc.solver.horizon}}},
                     {"oracle", table.meta}};
  write_text(out.table_csv, table.csv);
  write_json_file(out.summary_path, out.summary);
  log_info("wrote " + out.table_csv.string() + ", " +
           out.summary_path.string());
  return out;
}

// --- built-in smoke suite ---------------------------------------------------

namespace {

bool report(std::ostream& out, const char* name, bool ok,
            const std::string& detail) {
  out << (ok ? "[PASS] " : "[FAIL] ") << name;
  if (!ok && !detail.empty()) out << " (" << detail << ")";
  out << "\n";
  return ok;
}

}  // namespace

int self_check(std::ostream& out) {
  int failures = 0;

  // Scalar resolvent against the resonant Lorentzian closed form.
  {
    bool ok = false;
    std::string detail;
    try {
      const model::SystemHamiltonian sys(Eigen::MatrixXcd::Zero(1, 1));
      const auto kernel = kernels::MemoryKernel::from_density(
          model::SpectralDensity::lorentzian(0.1, 0.0, 1.0));
      const auto traj =
          volterra::solve_resolvent(sys, kernel, {1e-2, 2.0, 1e-15});
      const double om = std::sqrt(0.6);
      double worst = 0.0;
      for (Eigen::Index i = 0; i < traj.n_samples(); ++i) {
        const double t = traj.time(i);
        const double ref = std::exp(-0.5 * t) *
                           (std::cosh(0.5 * om * t) +
                            std::sinh(0.5 * om * t) / om);
        worst = std::max(worst,
                         std::abs(traj.amplitudes(0, i) - Complex(ref, 0.0)));
      }
      ok = worst < 1e-3;
      detail = "max deviation " + std::to_string(worst);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    failures += report(out, "scalar resolvent closed form", ok, detail) ? 0 : 1;
  }

  // Mixed-state run keeps trace and positivity.
  {
    bool ok = false;
    std::string detail;
    try {
      Eigen::MatrixXcd h(2, 2);
      h << 0.2, Complex(0.05, -0.02), Complex(0.05, 0.02), -0.1;
      const model::SystemHamiltonian sys(h);
      const auto density = model::SpectralDensity::lorentzian(0.1, 0.1, 1.0);
      const auto kernel = kernels::MemoryKernel::from_density(density);
      const auto profile = model::OccupationProfile::gaussian(0.15, 0.0, 1.5);
      const auto correlation = kernels::CorrelationKernel::diagonal(
          kernels::NonvacuumDensity(density, profile), 2);
      model::InitialState state;
      state.p = 0.5;
      state.sigma = Eigen::MatrixXcd::Zero(3, 3);
      state.sigma(0, 0) = 0.4;
      state.sigma(1, 1) = 0.6;
      state.occupation = profile;
      reduced::EvolveOptions opt;
      opt.step = 2e-3;
      opt.horizon = 1.0;
      opt.output_stride = 50;
      const auto series =
          reduced::evolve_exact(state, sys, kernel, correlation, opt);
      ok = series.max_trace_residual < 1e-9 &&
           series.min_eigenvalue > -1e-7;
      detail = "trace residual " +
               std::to_string(series.max_trace_residual) + ", min eig " +
               std::to_string(series.min_eigenvalue);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    failures += report(out, "mixed-state trace and positivity", ok, detail)
                    ? 0
                    : 1;
  }

  // Vanishing kernel: the semigroup form is exact.
  {
    bool ok = false;
    std::string detail;
    try {
      const model::SystemHamiltonian sys(
          (Eigen::MatrixXcd(1, 1) << 0.3).finished());
      const auto kernel = kernels::MemoryKernel::from_density(
          model::SpectralDensity::flat_window(0.0, -1.0, 1.0));
      const auto traj =
          volterra::solve_resolvent(sys, kernel, {1e-2, 4.0, 1e-15});
      const auto gen = bvh::build_generator(sys, kernel, 0.5,
                                            bvh::HypothesisCheck::warn);
      const double err =
          bvh::resolvent_asymptotic_error(traj, gen, 0.5, {0.5, 1.0});
      ok = err == 0.0;
      detail = "gap " + std::to_string(err);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    failures +=
        report(out, "vanishing kernel fixed point", ok, detail) ? 0 : 1;
  }

  // Serialization is deterministic.
  {
    bool ok = false;
    std::string detail;
    try {
      model::BlockDensityMatrix s;
      s.t = 0.123456789012345678;
      s.rho00 = 1.0 / 3.0;
      s.rho0e = Eigen::RowVectorXcd::Constant(1, Complex(0.1, -0.2));
      s.rhoee = Eigen::MatrixXcd::Constant(1, 1, Complex(2.0 / 3.0, 0.0));
      const std::string a = trajectory_row(s);
      const std::string b = trajectory_row(s);
      ok = !a.empty() && a == b;
      detail = "rows differ";
    } catch (const std::exception& e) {
      detail = e.what();
    }
    failures +=
        report(out, "deterministic serialization", ok, detail) ? 0 : 1;
  }

  return failures;
}

}  // namespace rwadyn::scenario
