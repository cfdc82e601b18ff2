// Weak-coupling semigroup: drift, renormalization, stationary inflow state,
// and rescaled-time propagation of the block state.

#include "rwadyn/bvh.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "rwadyn/errors.hpp"
#include "rwadyn/linalg.hpp"

namespace rwadyn::bvh {

namespace {

using Complex = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

// exp(drift * tau) through the shared eigenbasis.
Eigen::MatrixXcd drift_exponential(const Generator& gen, double tau) {
  Eigen::VectorXcd e(gen.drift_eigs.size());
  for (Eigen::Index i = 0; i < e.size(); ++i)
    e[i] = std::exp(gen.drift_eigs[i] * tau);
  return gen.basis * e.asDiagonal() * gen.basis.adjoint();
}

void require_levels(const Generator& gen, Eigen::Index levels,
                    const char* where) {
  if (levels != gen.frequencies.size()) {
    throw GridMismatch(std::string(where) +
                       ": block dimension does not match the generator");
  }
}

}  // namespace

Generator build_generator(const model::SystemHamiltonian& system,
                          const kernels::MemoryKernel& kernel, double coupling,
                          HypothesisCheck check) {
  if (coupling < 0.0) {
    throw ConfigError("bvh.coupling", "coupling must be nonnegative");
  }
  Generator gen;
  gen.coupling = coupling;
  gen.frequencies = system.eigenvalues();
  gen.basis = system.basis();

  const Eigen::Index n = gen.frequencies.size();
  const double c2 = coupling * coupling;
  gen.drift_eigs.resize(n);
  gen.renorm_eigs.resize(n);
  gen.transform_eigs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex p(0.0, -gen.frequencies[i]);
    const Complex gt = kernel.laplace(p);
    const Complex gd = kernel.laplace_derivative(p);
    if (check == HypothesisCheck::strict && !(gt.real() > 0.0)) {
      throw HypothesisViolated(
          "kernel transform is not strictly dissipative at system frequency "
          "w = " + std::to_string(gen.frequencies[i]));
    }
    const Complex drift = -gt + c2 * gd * gt;
    if (check == HypothesisCheck::strict && !(drift.real() < 0.0)) {
      throw HypothesisViolated(
          "second-order drift fails to decay at system frequency w = " +
          std::to_string(gen.frequencies[i]) +
          "; the coupling is too large for the expansion");
    }
    gen.transform_eigs[i] = gt;
    gen.drift_eigs[i] = drift;
    gen.renorm_eigs[i] = 1.0 - c2 * gd;
  }
  gen.drift =
      gen.basis * gen.drift_eigs.asDiagonal() * gen.basis.adjoint();
  gen.renormalization =
      gen.basis * gen.renorm_eigs.asDiagonal() * gen.basis.adjoint();
  return gen;
}

Eigen::MatrixXcd stationary_excited_block(
    const Generator& gen, const kernels::NonvacuumDensity& occupied) {
  const Eigen::Index n = gen.frequencies.size();
  const double c2 = gen.coupling * gen.coupling;
  const model::Interval win = occupied.window();
  const double span = win.hi > win.lo ? win.hi - win.lo : 0.0;
  const double kink_tol = 1e-8 * std::max(1.0, span);

  Eigen::VectorXd source(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = gen.frequencies[i];
    if (occupied.near_kink(w, kink_tol)) {
      throw NonSmoothOccupation(
          "occupied density is not differentiable at system frequency w = " +
          std::to_string(w) +
          "; the drift-shifted sampling needs a smooth neighborhood");
    }
    // Occupied density with the second-order oscillatory correction of the
    // drift folded in; the long-time value keeps an O(coupling^2) band
    // around the exact stationary state either way.
    const double m =
        occupied(w) + c2 * occupied.derivative(w) * gen.drift_eigs[i].imag();
    source[i] = std::norm(gen.renorm_eigs[i]) * m;
  }
  const Eigen::MatrixXcd q =
      gen.basis * (-2.0 * kPi * source).asDiagonal().toDenseMatrix() *
      gen.basis.adjoint();
  const Eigen::MatrixXcd y = linalg::lyapunov_solve(gen.drift, q);
  return 0.5 * (y + Eigen::MatrixXcd(y.adjoint()));
}

Eigen::MatrixXcd semigroup_excited_block(const Generator& gen,
                                         const Eigen::MatrixXcd& sigma_ee,
                                         double p,
                                         const Eigen::MatrixXcd& stationary,
                                         double tau) {
  require_levels(gen, sigma_ee.rows(), "semigroup_excited_block");
  if (!(tau >= 0.0)) {
    throw DomainError("semigroup requested at negative rescaled time");
  }
  const Eigen::MatrixXcd target = (1.0 - p) * stationary;
  const Eigen::MatrixXcd renormalized =
      gen.renormalization * (p * sigma_ee) * gen.renormalization.adjoint();
  const Eigen::MatrixXcd e = drift_exponential(gen, tau);
  return e * (renormalized - target) * e.adjoint() + target;
}

Eigen::RowVectorXcd semigroup_coherence(const Generator& gen,
                                        const Eigen::RowVectorXcd& sigma_0e,
                                        double p, double tau) {
  require_levels(gen, sigma_0e.cols(), "semigroup_coherence");
  if (!(tau >= 0.0)) {
    throw DomainError("semigroup requested at negative rescaled time");
  }
  const Eigen::MatrixXcd e = drift_exponential(gen, tau);
  return (p * sigma_0e) * gen.renormalization.adjoint() * e.adjoint();
}

model::BlockDensityMatrix semigroup_blocks(const Generator& gen,
                                           const model::InitialState& state,
                                           const Eigen::MatrixXcd& stationary,
                                           double tau) {
  model::validate_initial_state(state, gen.frequencies.size());
  const Eigen::Index n = gen.frequencies.size();
  model::BlockDensityMatrix b;
  b.t = tau;
  b.rhoee = semigroup_excited_block(gen, state.sigma.block(1, 1, n, n),
                                    state.p, stationary, tau);
  b.rho0e = semigroup_coherence(
      gen, Eigen::RowVectorXcd(state.sigma.block(0, 1, 1, n)), state.p, tau);
  b.rho00 = 1.0 - b.rhoee.trace().real();
  return b;
}

model::BlockDensityMatrix asymptotic_blocks(const model::InitialState& state,
                                            const Eigen::MatrixXcd& stationary) {
  const Eigen::Index n = stationary.rows();
  model::BlockDensityMatrix b;
  b.t = std::numeric_limits<double>::infinity();
  b.rhoee = (1.0 - state.p) * stationary;
  b.rho0e = Eigen::RowVectorXcd::Zero(n);
  b.rho00 = 1.0 - b.rhoee.trace().real();
  return b;
}

double resolvent_asymptotic_error(const volterra::ResolventTrajectory& traj,
                                  const Generator& gen, double coupling,
                                  const std::vector<double>& taus) {
  require_levels(gen, traj.levels(), "resolvent_asymptotic_error");
  const double c2 = coupling * coupling;
  if (!(c2 > 0.0)) {
    throw ConfigError("bvh.coupling",
                      "rescaled-time comparison needs a positive coupling");
  }
  double worst = 0.0;
  for (double tau : taus) {
    if (!(tau >= 0.0)) {
      throw DomainError("rescaled comparison time must be nonnegative");
    }
    const double t = tau / c2;
    const double pos = t / traj.step;
    const auto idx = static_cast<Eigen::Index>(std::llround(pos));
    if (idx < 0 || idx >= traj.n_samples()) {
      throw HorizonMismatch(
          "trajectory horizon " + std::to_string(traj.horizon) +
          " is shorter than rescaled time " + std::to_string(tau) +
          " at coupling " + std::to_string(coupling));
    }
    const double tau_snap = static_cast<double>(idx) * traj.step * c2;
    Eigen::VectorXcd target(gen.drift_eigs.size());
    for (Eigen::Index i = 0; i < target.size(); ++i)
      target[i] = std::exp(gen.drift_eigs[i] * tau_snap) * gen.renorm_eigs[i];
    const Eigen::MatrixXcd gap =
        traj.sample(idx) -
        gen.basis * target.asDiagonal() * gen.basis.adjoint();
    worst = std::max(worst, linalg::max_abs(gap));
  }
  return worst;
}

model::BlockDensityMatrix interaction_frame(
    const model::BlockDensityMatrix& state,
    const model::SystemHamiltonian& system) {
  const Eigen::Index n = state.rhoee.rows();
  if (n != system.levels()) {
    throw GridMismatch("interaction_frame: block dimension does not match "
                       "the system");
  }
  Eigen::VectorXcd phase(n);
  for (Eigen::Index i = 0; i < n; ++i)
    phase[i] = std::exp(Complex(0.0, system.eigenvalues()[i] * state.t));
  const Eigen::MatrixXcd rot =
      system.basis() * phase.asDiagonal() * system.basis().adjoint();
  model::BlockDensityMatrix out;
  out.t = state.t;
  out.rho00 = state.rho00;
  out.rho0e = state.rho0e * rot.adjoint();
  out.rhoee = rot * state.rhoee * rot.adjoint();
  return out;
}

}  // namespace rwadyn::bvh
