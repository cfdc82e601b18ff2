// Discretized-reservoir brute force: exact evolution in the conserved
// one-excitation sector of a finite mode comb.

#include "rwadyn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "rwadyn/errors.hpp"
#include "rwadyn/quadrature.hpp"

namespace rwadyn::oracle {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

DiscreteBath discretize_bath(const model::SpectralDensity& density,
                             const model::OccupationProfile& occupation,
                             const DiscretizeOptions& opt) {
  if (opt.modes < 1)
    throw ConfigError("oracle.modes", "need at least one bath mode");
  if (!(opt.window_hi > opt.window_lo))
    throw ConfigError("oracle.window", "window must have positive width");

  DiscreteBath bath;
  const int m = opt.modes;
  bath.window_lo = opt.window_lo;
  bath.window_hi = opt.window_hi;
  bath.domega = (opt.window_hi - opt.window_lo) / m;
  bath.recurrence_time = 2.0 * kPi / bath.domega;
  bath.frequencies.resize(m);
  bath.couplings.resize(m);
  bath.occupations.resize(m);
  for (int a = 0; a < m; ++a) {
    const double w = opt.window_lo + (a + 0.5) * bath.domega;
    bath.frequencies[a] = w;
    bath.couplings[a] = std::sqrt(density(w) * bath.domega);
    bath.occupations[a] = occupation(w);
  }

  const double total_coupling = density.total_integral();
  bath.coupling_coverage =
      total_coupling > 0.0
          ? density.mass_within(opt.window_lo, opt.window_hi) / total_coupling
          : 1.0;

  kernels::NonvacuumDensity occupied(density, occupation);
  const double total_occupied = occupied.total_integral();
  if (total_occupied > 0.0) {
    const model::Interval win = occupied.window();
    const double lo = std::max(win.lo, opt.window_lo);
    const double hi = std::min(win.hi, opt.window_hi);
    double inside = 0.0;
    if (hi > lo) {
      inside = quad::integrate(
                   [&](double w) { return Complex(occupied(w), 0.0); }, lo, hi,
                   1e-13, 1e-11, 4000)
                   .value.real();
    }
    bath.occupied_coverage = inside / total_occupied;
  }
  if (bath.occupied_coverage < opt.occupied_coverage_min) {
    throw WindowTooNarrow(
        "discretization window [" + std::to_string(opt.window_lo) + ", " +
        std::to_string(opt.window_hi) + "] captures only " +
        std::to_string(bath.occupied_coverage) +
        " of the occupied spectral mass (need " +
        std::to_string(opt.occupied_coverage_min) + ")");
  }
  return bath;
}

DiscreteBathOracle::DiscreteBathOracle(const model::SystemHamiltonian& system,
                                       const DiscreteBath& bath,
                                       double coupling_scale,
                                       Eigen::Index max_dimension)
    : levels_(system.levels()), bath_(bath) {
  const Eigen::Index n = levels_;
  const Eigen::Index m = bath.frequencies.size();
  const Eigen::Index d = n + n * m;
  if (d > max_dimension) {
    throw DimensionTooLarge("one-excitation sector dimension " +
                            std::to_string(d) + " exceeds the oracle limit " +
                            std::to_string(max_dimension));
  }
  // Sector basis: N excited system levels with empty reservoirs, then one
  // bath quantum at frequency a of reservoir j at column N + j*M + a.  Each
  // level couples only to its own reservoir copy.
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
  h.topLeftCorner(n, n) = system.matrix();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index q = n + j * m + a;
      h(q, q) = bath.frequencies[a];
      h(j, q) = coupling_scale * bath.couplings[a];
      h(q, j) = coupling_scale * bath.couplings[a];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success)
    throw DomainError("sector Hamiltonian eigendecomposition failed");
  evals_ = solver.eigenvalues();
  qs_ = solver.eigenvectors().topRows(n);
  qb_ = solver.eigenvectors().bottomRows(n * m);
}

Eigen::VectorXcd DiscreteBathOracle::phases(double t) const {
  Eigen::VectorXcd ph(evals_.size());
  for (Eigen::Index k = 0; k < evals_.size(); ++k)
    ph[k] = std::exp(Complex(0.0, -evals_[k] * t));
  return ph;
}

Eigen::MatrixXcd DiscreteBathOracle::system_block(double t) const {
  return qs_ * phases(t).asDiagonal() * qs_.adjoint();
}

Eigen::MatrixXcd DiscreteBathOracle::system_bath_block(double t) const {
  return qs_ * phases(t).asDiagonal() * qb_.adjoint();
}

model::BlockDensityMatrix DiscreteBathOracle::reduced_state(
    const model::InitialState& state, double t) const {
  model::validate_initial_state(state, levels_);
  const Eigen::Index n = levels_;
  const Eigen::Index m = bath_.frequencies.size();

  const Eigen::MatrixXcd a = system_block(t);
  const Eigen::MatrixXcd sigma_ee = state.sigma.block(1, 1, n, n);
  const Eigen::RowVectorXcd sigma_0e = state.sigma.block(0, 1, 1, n);

  model::BlockDensityMatrix out;
  out.t = t;
  out.rho0e = state.p * sigma_0e * a.adjoint();
  Eigen::MatrixXcd ee = state.p * a * sigma_ee * a.adjoint();

  const bool has_bath_branch = state.p < 1.0;
  if (has_bath_branch) {
    if (const auto* prof =
            std::get_if<model::OccupationProfile>(&state.occupation)) {
      if (!prof->is_zero()) {
        // Raw profile values, not cell masses: the kernel the continuum
        // dynamics sees is sum_a J(w_a) rho(w_a) e^{-i w_a tau} dw, so the
        // branch weight per mode is rho(w_a) with dw already inside g_a^2.
        Eigen::VectorXd weights(n * m);
        for (Eigen::Index j = 0; j < n; ++j)
          for (Eigen::Index aa = 0; aa < m; ++aa)
            weights[j * m + aa] = (*prof)(bath_.frequencies[aa]);
        const Eigen::MatrixXcd asb = system_bath_block(t);
        ee.noalias() +=
            (1.0 - state.p) * asb * weights.asDiagonal() * asb.adjoint();
      }
    } else {
      const auto& grid =
          std::get<model::GeneralGridOccupation>(state.occupation);
      model::validate_occupation(grid);
      if (grid.n_reservoirs != n)
        throw GridMismatch("occupation reservoir count " +
                           std::to_string(grid.n_reservoirs) +
                           " does not match the system's " + std::to_string(n));
      if (grid.modes() != m)
        throw GridMismatch("occupation grid has " +
                           std::to_string(grid.modes()) +
                           " points, oracle comb has " + std::to_string(m));
      const double tol = 1e-9 * bath_.domega;
      if (std::abs(grid.dk - bath_.domega) > tol ||
          (grid.grid - bath_.frequencies).cwiseAbs().maxCoeff() > tol)
        throw GridMismatch(
            "general occupation grid does not coincide with the oracle comb");
      const Eigen::MatrixXcd asb = system_bath_block(t);
      ee.noalias() +=
          ((1.0 - state.p) * grid.dk) * (asb * grid.rho * asb.adjoint());
    }
  }

  out.rhoee = std::move(ee);
  out.rho00 = 1.0 - out.rhoee.trace().real();
  return out;
}

std::vector<model::BlockDensityMatrix> DiscreteBathOracle::reduced_states(
    const model::InitialState& state, const std::vector<double>& times) const {
  std::vector<model::BlockDensityMatrix> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(reduced_state(state, t));
  return out;
}

Eigen::VectorXcd DiscreteBathOracle::excitation_amplitude(
    const Eigen::VectorXcd& c0, const Eigen::MatrixXcd& psi0, double t) const {
  const Eigen::Index n = levels_;
  const Eigen::Index m = bath_.frequencies.size();
  if (c0.size() != n)
    throw GridMismatch("system amplitude vector has wrong length");
  if (psi0.rows() != m || psi0.cols() != n)
    throw GridMismatch("bath amplitude array must be modes x reservoirs");

  Eigen::VectorXcd bath_vec(n * m);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index a = 0; a < m; ++a) bath_vec[j * m + a] = psi0(a, j);

  Eigen::VectorXcd coef = qs_.adjoint() * c0 + qb_.adjoint() * bath_vec;
  coef = phases(t).cwiseProduct(coef);
  return qs_ * coef;
}

}  // namespace rwadyn::oracle
