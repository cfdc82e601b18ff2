// Implementation of the problem-definition layer.

#include "rwadyn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rwadyn::model {

namespace {

// Piecewise-linear table helpers shared by density and occupation.

void check_table(const Eigen::VectorXd& grid, const Eigen::VectorXd& values,
                 const char* field) {
  if (grid.size() < 2) {
    throw ConfigError(field, "table needs at least two grid points");
  }
  if (grid.size() != values.size()) {
    throw ConfigError(field, "grid and value arrays differ in length");
  }
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    if (!(grid(i) > grid(i - 1))) {
      throw ConfigError(field, "grid must be strictly increasing");
    }
  }
}

double table_value(const Tabulated& t, double w) {
  const Eigen::Index n = t.grid.size();
  if (w < t.grid(0) || w > t.grid(n - 1)) return 0.0;
  const double* begin = t.grid.data();
  Eigen::Index i = std::upper_bound(begin, begin + n, w) - begin - 1;
  if (i >= n - 1) return t.values(n - 1);
  const double f = (w - t.grid(i)) / (t.grid(i + 1) - t.grid(i));
  return t.values(i) + f * (t.values(i + 1) - t.values(i));
}

double table_derivative(const Tabulated& t, double w) {
  const Eigen::Index n = t.grid.size();
  if (w < t.grid(0) || w > t.grid(n - 1)) return 0.0;
  const double* begin = t.grid.data();
  Eigen::Index i = std::upper_bound(begin, begin + n, w) - begin - 1;
  if (i >= n - 1) i = n - 2;  // right endpoint takes the last slope
  return (t.values(i + 1) - t.values(i)) / (t.grid(i + 1) - t.grid(i));
}

double table_total(const Tabulated& t) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < t.grid.size(); ++i) {
    sum += 0.5 * (t.values(i) + t.values(i + 1)) * (t.grid(i + 1) - t.grid(i));
  }
  return sum;
}

// Exact integral of the linear interpolant over [lo, hi].
double table_mass(const Tabulated& t, double lo, double hi) {
  const Eigen::Index n = t.grid.size();
  lo = std::max(lo, t.grid(0));
  hi = std::min(hi, t.grid(n - 1));
  if (!(hi > lo)) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double a = std::max(lo, t.grid(i));
    const double b = std::min(hi, t.grid(i + 1));
    if (b <= a) continue;
    sum += 0.5 * (table_value(t, a) + table_value(t, b)) * (b - a);
  }
  return sum;
}

}  // namespace

// --- SpectralDensity -------------------------------------------------------

SpectralDensity SpectralDensity::lorentzian(double kappa, double omega0,
                                            double gamma) {
  if (kappa < 0.0) {
    throw NegativeSpectralDensity("lorentzian weight must be nonnegative");
  }
  if (!(gamma > 0.0)) {
    throw ConfigError("spectral_density.gamma", "half width must be positive");
  }
  return SpectralDensity(Lorentzian{kappa, omega0, gamma});
}

SpectralDensity SpectralDensity::flat_window(double height, double lo,
                                             double hi) {
  if (height < 0.0) {
    throw NegativeSpectralDensity("window height must be nonnegative");
  }
  if (!(hi > lo)) {
    throw ConfigError("spectral_density.window", "needs omega_hi > omega_lo");
  }
  return SpectralDensity(FlatWindow{height, lo, hi});
}

SpectralDensity SpectralDensity::tabulated(Eigen::VectorXd grid,
                                           Eigen::VectorXd values) {
  check_table(grid, values, "spectral_density.table");
  if ((values.array() < 0.0).any()) {
    throw NegativeSpectralDensity("tabulated density has a negative entry");
  }
  return SpectralDensity(Tabulated{std::move(grid), std::move(values)});
}

double SpectralDensity::operator()(double w) const {
  return std::visit(
      [w](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          const double d = w - f.omega0;
          return (f.kappa / std::numbers::pi) * f.gamma * f.gamma /
                 (d * d + f.gamma * f.gamma);
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return (w >= f.omega_lo && w <= f.omega_hi) ? f.height : 0.0;
        } else {
          return table_value(f, w);
        }
      },
      fam_);
}

double SpectralDensity::derivative(double w) const {
  return std::visit(
      [w](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          const double d = w - f.omega0;
          const double den = d * d + f.gamma * f.gamma;
          return (f.kappa / std::numbers::pi) * f.gamma * f.gamma *
                 (-2.0 * d) / (den * den);
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return 0.0;
        } else {
          return table_derivative(f, w);
        }
      },
      fam_);
}

bool SpectralDensity::smooth() const {
  return std::holds_alternative<Lorentzian>(fam_);
}

double SpectralDensity::total_integral() const {
  return std::visit(
      [](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          return f.kappa * f.gamma;
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return f.height * (f.omega_hi - f.omega_lo);
        } else {
          return table_total(f);
        }
      },
      fam_);
}

double SpectralDensity::mass_within(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  return std::visit(
      [lo, hi](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          return (f.kappa * f.gamma / std::numbers::pi) *
                 (std::atan((hi - f.omega0) / f.gamma) -
                  std::atan((lo - f.omega0) / f.gamma));
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          const double a = std::max(lo, f.omega_lo);
          const double b = std::min(hi, f.omega_hi);
          return b > a ? f.height * (b - a) : 0.0;
        } else {
          return table_mass(f, lo, hi);
        }
      },
      fam_);
}

std::vector<double> SpectralDensity::kink_points() const {
  return std::visit(
      [](const auto& f) -> std::vector<double> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          return {};
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return {f.omega_lo, f.omega_hi};
        } else {
          return std::vector<double>(f.grid.data(),
                                     f.grid.data() + f.grid.size());
        }
      },
      fam_);
}

SpectralDensity SpectralDensity::scaled(double factor) const {
  if (factor < 0.0) {
    throw ConfigError("density.scale", "scale factor must be nonnegative");
  }
  return std::visit(
      [factor](const auto& f) -> SpectralDensity {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          return SpectralDensity(Lorentzian{f.kappa * factor, f.omega0,
                                            f.gamma});
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return SpectralDensity(
              FlatWindow{f.height * factor, f.omega_lo, f.omega_hi});
        } else {
          return SpectralDensity(Tabulated{f.grid, f.values * factor});
        }
      },
      fam_);
}

Interval SpectralDensity::support() const {
  return std::visit(
      [](const auto& f) -> Interval {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          // Unbounded; the window below leaves a relative tail ~6e-7 and is
          // only used after intersection with a bounded occupation window.
          return Interval{f.omega0 - 1e6 * f.gamma, f.omega0 + 1e6 * f.gamma,
                          false};
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return Interval{f.omega_lo, f.omega_hi, true};
        } else {
          return Interval{f.grid(0), f.grid(f.grid.size() - 1), true};
        }
      },
      fam_);
}

// --- OccupationProfile -----------------------------------------------------

OccupationProfile OccupationProfile::gaussian(double amplitude, double center,
                                              double sigma) {
  if (amplitude < 0.0) {
    throw NonPositiveOccupation("occupation amplitude must be nonnegative");
  }
  if (!(sigma > 0.0)) {
    throw ConfigError("occupation.sigma", "width must be positive");
  }
  return OccupationProfile(GaussianBump{amplitude, center, sigma});
}

OccupationProfile OccupationProfile::window(double height, double lo,
                                            double hi) {
  if (height < 0.0) {
    throw NonPositiveOccupation("occupation height must be nonnegative");
  }
  if (!(hi > lo)) {
    throw ConfigError("occupation.window", "needs omega_hi > omega_lo");
  }
  return OccupationProfile(FlatWindow{height, lo, hi});
}

OccupationProfile OccupationProfile::tabulated(Eigen::VectorXd grid,
                                               Eigen::VectorXd values) {
  check_table(grid, values, "occupation.table");
  if ((values.array() < 0.0).any()) {
    throw NonPositiveOccupation("tabulated occupation has a negative entry");
  }
  return OccupationProfile(Tabulated{std::move(grid), std::move(values)});
}

OccupationProfile OccupationProfile::zero() {
  return OccupationProfile(ZeroOccupation{});
}

double OccupationProfile::operator()(double w) const {
  return std::visit(
      [w](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianBump>) {
          const double z = (w - f.center) / f.sigma;
          return f.amplitude * std::exp(-0.5 * z * z);
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return (w >= f.omega_lo && w <= f.omega_hi) ? f.height : 0.0;
        } else if constexpr (std::is_same_v<T, Tabulated>) {
          return table_value(f, w);
        } else {
          return 0.0;
        }
      },
      fam_);
}

double OccupationProfile::derivative(double w) const {
  return std::visit(
      [w](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianBump>) {
          const double z = (w - f.center) / f.sigma;
          return -f.amplitude * z / f.sigma * std::exp(-0.5 * z * z);
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Tabulated>) {
          return table_derivative(f, w);
        } else {
          return 0.0;
        }
      },
      fam_);
}

bool OccupationProfile::smooth() const {
  return std::holds_alternative<GaussianBump>(fam_) ||
         std::holds_alternative<ZeroOccupation>(fam_);
}

bool OccupationProfile::is_zero() const {
  if (std::holds_alternative<ZeroOccupation>(fam_)) return true;
  if (const auto* g = std::get_if<GaussianBump>(&fam_)) {
    return g->amplitude == 0.0;
  }
  if (const auto* w = std::get_if<FlatWindow>(&fam_)) {
    return w->height == 0.0;
  }
  if (const auto* t = std::get_if<Tabulated>(&fam_)) {
    return (t->values.array() == 0.0).all();
  }
  return false;
}

double OccupationProfile::total_integral() const {
  return std::visit(
      [](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianBump>) {
          return f.amplitude * f.sigma * std::sqrt(2.0 * std::numbers::pi);
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return f.height * (f.omega_hi - f.omega_lo);
        } else if constexpr (std::is_same_v<T, Tabulated>) {
          return table_total(f);
        } else {
          return 0.0;
        }
      },
      fam_);
}

std::vector<double> OccupationProfile::kink_points() const {
  return std::visit(
      [](const auto& f) -> std::vector<double> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, FlatWindow>) {
          return {f.omega_lo, f.omega_hi};
        } else if constexpr (std::is_same_v<T, Tabulated>) {
          return std::vector<double>(f.grid.data(),
                                     f.grid.data() + f.grid.size());
        } else {
          return {};
        }
      },
      fam_);
}

Interval OccupationProfile::support() const {
  return std::visit(
      [](const auto& f) -> Interval {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianBump>) {
          // +-8.5 sigma leaves a tail below 1e-16 of the peak.
          return Interval{f.center - 8.5 * f.sigma, f.center + 8.5 * f.sigma,
                          false};
        } else if constexpr (std::is_same_v<T, FlatWindow>) {
          return Interval{f.omega_lo, f.omega_hi, true};
        } else if constexpr (std::is_same_v<T, Tabulated>) {
          return Interval{f.grid(0), f.grid(f.grid.size() - 1), true};
        } else {
          return Interval{0.0, 0.0, true};
        }
      },
      fam_);
}

// --- GeneralGridOccupation -------------------------------------------------

void validate_occupation(const GeneralGridOccupation& occ) {
  if (occ.grid.size() < 1) {
    throw ConfigError("occupation.grid", "needs at least one mode");
  }
  if (!(occ.dk > 0.0)) {
    throw ConfigError("occupation.dk", "grid spacing must be positive");
  }
  for (Eigen::Index i = 1; i < occ.grid.size(); ++i) {
    const double gap = occ.grid(i) - occ.grid(i - 1);
    if (std::abs(gap - occ.dk) > 1e-9 * occ.dk) {
      throw GridMismatch("occupation grid is not uniform with spacing dk");
    }
  }
  if (occ.n_reservoirs < 1) {
    throw ConfigError("occupation.n_reservoirs", "must be at least 1");
  }
  const Eigen::Index dim = occ.n_reservoirs * occ.grid.size();
  if (occ.rho.rows() != dim || occ.rho.cols() != dim) {
    throw GridMismatch("occupation matrix must be " + std::to_string(dim) +
                       "x" + std::to_string(dim) + " for " +
                       std::to_string(occ.n_reservoirs) + " reservoirs on " +
                       std::to_string(occ.grid.size()) + " grid points");
  }
  const double scale = std::max(1.0, linalg::max_abs(occ.rho));
  if (linalg::hermiticity_defect(occ.rho) > 1e-10 * scale) {
    throw NotHermitian("one-excitation occupation matrix is not Hermitian");
  }
  if (linalg::min_hermitian_eigenvalue(occ.rho) < -1e-10 * scale) {
    throw NonPositiveOccupation(
        "one-excitation occupation matrix has a negative eigenvalue");
  }
}

// --- SystemHamiltonian -----------------------------------------------------

SystemHamiltonian::SystemHamiltonian(Eigen::MatrixXcd h) : h_(std::move(h)) {
  if (h_.rows() == 0 || h_.rows() != h_.cols()) {
    throw ConfigError("system.hamiltonian",
                      "needs a nonempty square matrix over the excited levels");
  }
  eig_ = linalg::hermitian_eig(h_);
}

// --- states ----------------------------------------------------------------

void validate_initial_state(const InitialState& state,
                            Eigen::Index system_levels) {
  if (!(state.p >= 0.0 && state.p <= 1.0)) {
    throw InvalidState("mixture weight p must lie in [0, 1]");
  }
  const Eigen::Index d = system_levels + 1;
  if (state.sigma.rows() != d || state.sigma.cols() != d) {
    throw InvalidState("system state must be " + std::to_string(d) + "x" +
                       std::to_string(d) + " (ground + excited levels)");
  }
  const double scale = std::max(1.0, linalg::max_abs(state.sigma));
  if (linalg::hermiticity_defect(state.sigma) > 1e-10 * scale) {
    throw InvalidState("system state is not Hermitian");
  }
  if (std::abs(state.sigma.trace().real() - 1.0) > 1e-10 ||
      std::abs(state.sigma.trace().imag()) > 1e-10) {
    throw InvalidState("system state must have unit trace");
  }
  if (linalg::min_hermitian_eigenvalue(state.sigma) < -1e-10) {
    throw InvalidState("system state has a negative eigenvalue");
  }
}

// --- BlockDensityMatrix ----------------------------------------------------

Eigen::MatrixXcd BlockDensityMatrix::assemble() const {
  const Eigen::Index n = rhoee.rows();
  Eigen::MatrixXcd full(n + 1, n + 1);
  full(0, 0) = rho00;
  full.block(0, 1, 1, n) = rho0e;
  full.block(1, 0, n, 1) = rho0e.adjoint();
  full.block(1, 1, n, n) = rhoee;
  return full;
}

double BlockDensityMatrix::trace() const {
  return rho00 + rhoee.trace().real();
}

double BlockDensityMatrix::min_eigenvalue() const {
  return linalg::min_hermitian_eigenvalue(assemble());
}

BlockDensityMatrix initial_blocks(const InitialState& state) {
  const Eigen::Index n = state.sigma.rows() - 1;
  BlockDensityMatrix b;
  b.t = 0.0;
  b.rho00 = state.p * state.sigma(0, 0).real() + (1.0 - state.p);
  b.rho0e = state.p * state.sigma.block(0, 1, 1, n);
  b.rhoee = state.p * state.sigma.block(1, 1, n, n);
  return b;
}

double block_trace_distance(const BlockDensityMatrix& a,
                            const BlockDensityMatrix& b) {
  if (a.levels() != b.levels()) {
    throw GridMismatch("block states have different numbers of levels");
  }
  return linalg::trace_distance(a.assemble(), b.assemble());
}

// --- diagnostics -----------------------------------------------------------

Diagnostics validate_problem(const SystemHamiltonian& h,
                             const SpectralDensity& density,
                             const InitialState& state) {
  validate_initial_state(state, h.levels());
  (void)density;  // families validate on construction
  Diagnostics diag;
  const double n = static_cast<double>(h.levels());
  if (const auto* prof = std::get_if<OccupationProfile>(&state.occupation)) {
    diag.zero_occupation = prof->is_zero();
    diag.normalization_deviation =
        std::abs(n * prof->total_integral() - 1.0);
  } else {
    const auto& occ = std::get<GeneralGridOccupation>(state.occupation);
    validate_occupation(occ);
    if (occ.n_reservoirs != h.levels()) {
      throw GridMismatch("occupation has " +
                         std::to_string(occ.n_reservoirs) +
                         " reservoirs but the system has " +
                         std::to_string(h.levels()) + " excited levels");
    }
    const double tr = occ.rho.trace().real() * occ.dk;
    diag.zero_occupation = tr == 0.0;
    diag.normalization_deviation = std::abs(tr - 1.0);
  }
  if (diag.zero_occupation && state.p < 1.0) {
    diag.warnings.push_back(
        "one-excitation branch has weight " + std::to_string(1.0 - state.p) +
        " but the occupation is identically zero");
  }
  if (!diag.zero_occupation && diag.normalization_deviation > 1e-6) {
    diag.warnings.push_back(
        "occupation deviates from the unit-excitation normalization by " +
        std::to_string(diag.normalization_deviation) +
        " (values are used as given, never rescaled)");
  }
  return diag;
}

}  // namespace rwadyn::model
