// Implicit-trapezoid Volterra stepping in the Hamiltonian eigenbasis.

#include "rwadyn/volterra.hpp"

#include <cmath>

namespace rwadyn::volterra {

namespace {

constexpr Complex kI{0.0, 1.0};

Eigen::Index checked_steps(const SolveOptions& opt) {
  if (!(opt.step > 0.0)) {
    throw ConfigError("solver.step", "step must be positive");
  }
  if (!(opt.horizon > 0.0)) {
    throw ConfigError("solver.horizon", "horizon must be positive");
  }
  const double ratio = opt.horizon / opt.step;
  if (ratio > 1e7 + 0.5) {
    throw DimensionTooLarge("horizon / step = " + std::to_string(ratio) +
                            " exceeds the 1e7 step guard");
  }
  const auto n = static_cast<Eigen::Index>(std::llround(ratio));
  if (n < 1 || std::abs(static_cast<double>(n) * opt.step - opt.horizon) >
                   1e-9 * std::max(1.0, opt.horizon)) {
    throw ConfigError("solver.horizon",
                      "horizon must be a whole number of steps");
  }
  return n;
}

}  // namespace

ResolventStream::ResolventStream(const model::SystemHamiltonian& h,
                                 const kernels::MemoryKernel& kernel,
                                 const SolveOptions& opt) {
  step_ = opt.step;
  total_ = checked_steps(opt);
  eigenvalues_ = h.eigenvalues();
  basis_ = h.basis();
  const Eigen::Index nlev = eigenvalues_.size();

  const double g0 = std::abs(kernel(0.0));
  if (0.25 * step_ * step_ * g0 >= 0.5) {
    throw StepTooLarge("step " + std::to_string(step_) +
                       " is too large for kernel weight G(0) = " +
                       std::to_string(g0));
  }

  // Lag window: the last sample whose kernel magnitude reaches the cutoff
  // relative to |G(0)|.  |G| may oscillate through zero, so the scan keeps
  // the last crossing, not the first.
  if (!(opt.lag_cutoff >= 0.0 && opt.lag_cutoff < 1.0)) {
    throw ConfigError("solver.lag_cutoff", "cutoff must lie in [0, 1)");
  }
  lag_ = 0;
  if (g0 > 0.0) {
    const double floor = opt.lag_cutoff * g0;
    for (Eigen::Index l = total_; l >= 1; --l) {
      if (std::abs(kernel(static_cast<double>(l) * step_)) >= floor) {
        lag_ = l;
        break;
      }
    }
  }

  kernel_.resize(nlev);
  ring_.resize(nlev);
  const auto ring_size = static_cast<std::size_t>(lag_) + 2;
  for (Eigen::Index i = 0; i < nlev; ++i) {
    kernel_[i].resize(static_cast<std::size_t>(lag_) + 1);
    for (Eigen::Index l = 0; l <= lag_; ++l) {
      const double t = static_cast<double>(l) * step_;
      kernel_[i][static_cast<std::size_t>(l)] =
          kernel(t) * std::exp(kI * (eigenvalues_(i) * t));
    }
    ring_[i].assign(ring_size, Complex{0.0, 0.0});
    ring_[i][0] = Complex{1.0, 0.0};
  }
  v_ = Eigen::VectorXcd::Ones(nlev);
  conv_prev_ = Eigen::VectorXcd::Zero(nlev);
  n_ = 0;
}

void ResolventStream::advance() {
  const Eigen::Index n1 = n_ + 1;
  const double h = step_;
  const auto ring_size = static_cast<Eigen::Index>(ring_[0].size());
  const Eigen::Index mmax = std::min(n_, lag_);
  for (Eigen::Index i = 0; i < v_.size(); ++i) {
    const auto& k = kernel_[i];
    auto& ring = ring_[i];
    Complex acc{0.0, 0.0};
    for (Eigen::Index m = 1; m <= mmax; ++m) {
      acc += k[static_cast<std::size_t>(m)] *
             ring[static_cast<std::size_t>((n1 - m) % ring_size)];
    }
    if (n1 <= lag_) {
      // Half-weight contribution of v(0) = 1 at the far end of the window.
      acc += 0.5 * k[static_cast<std::size_t>(n1)];
    }
    const Complex conv_part = h * acc;
    const Complex rhs = v_(i) - 0.5 * h * (conv_prev_(i) + conv_part);
    const Complex vn1 = rhs / (1.0 + 0.25 * h * h * k[0]);
    conv_prev_(i) = conv_part + 0.5 * h * k[0] * vn1;
    v_(i) = vn1;
    ring[static_cast<std::size_t>(n1 % ring_size)] = vn1;
  }
  n_ = n1;
}

Eigen::MatrixXcd ResolventTrajectory::sample(Eigen::Index idx) const {
  if (idx < 0 || idx >= n_samples()) {
    throw DomainError("resolvent sample index out of range");
  }
  if (idx == 0) {
    return Eigen::MatrixXcd::Identity(levels(), levels());
  }
  return basis * amplitudes.col(idx).asDiagonal() * basis.adjoint();
}

double ResolventTrajectory::max_singular(Eigen::Index idx) const {
  if (idx < 0 || idx >= n_samples()) {
    throw DomainError("resolvent sample index out of range");
  }
  return amplitudes.col(idx).cwiseAbs().maxCoeff();
}

ResolventTrajectory solve_resolvent(const model::SystemHamiltonian& h,
                                    const kernels::MemoryKernel& kernel,
                                    const SolveOptions& opt) {
  const Eigen::Index n = checked_steps(opt);
  if (n + 1 > 2000001) {
    throw DimensionTooLarge(
        "dense resolvent storage refused beyond 2e6 samples (requested " +
        std::to_string(n + 1) + "); use the streaming solver");
  }
  if (h.levels() * (n + 1) > 8000000) {
    throw DimensionTooLarge(
        "dense resolvent storage refused beyond 8e6 amplitude entries; "
        "use the streaming solver");
  }
  ResolventStream stream(h, kernel, opt);
  ResolventTrajectory out;
  out.step = opt.step;
  out.horizon = opt.horizon;
  out.eigenvalues = stream.eigenvalues();
  out.basis = stream.basis();
  out.amplitudes.resize(h.levels(), n + 1);
  out.amplitudes.col(0) = stream.current();
  while (!stream.done()) {
    stream.advance();
    out.amplitudes.col(stream.index()) = stream.current();
  }
  return out;
}

ConvergenceReport convergence_report(const model::SystemHamiltonian& h,
                                     const kernels::MemoryKernel& kernel,
                                     const SolveOptions& opt) {
  ResolventTrajectory coarse = solve_resolvent(h, kernel, opt);
  SolveOptions fine_opt = opt;
  fine_opt.step = 0.5 * opt.step;
  ResolventTrajectory fine = solve_resolvent(h, kernel, fine_opt);
  ConvergenceReport rep;
  rep.coarse_step = opt.step;
  for (Eigen::Index idx = 0; idx < coarse.n_samples(); ++idx) {
    const double dev =
        (coarse.amplitudes.col(idx) - fine.amplitudes.col(2 * idx))
            .cwiseAbs()
            .maxCoeff();
    rep.max_deviation = std::max(rep.max_deviation, dev);
  }
  return rep;
}

DriveProfile drive_profile(const model::SpectralDensity& density,
                           const model::BathExcitationProfile& bath,
                           double coupling_scale) {
  const Eigen::Index m = bath.grid.size();
  if (bath.amplitudes.rows() != m) {
    throw GridMismatch("bath amplitude rows must match the grid length");
  }
  if (!(bath.dk > 0.0)) {
    throw ConfigError("bath.dk", "grid spacing must be positive");
  }
  const Eigen::Index nlev = bath.amplitudes.cols();
  Eigen::VectorXd weights(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const double j = density(bath.grid(a));
    if (j == 0.0 && bath.amplitudes.row(a).cwiseAbs().maxCoeff() > 1e-12) {
      throw GridMismatch(
          "bath excitation has amplitude at uncoupled frequency " +
          std::to_string(bath.grid(a)) +
          "; it would be silently dropped from the reduced dynamics");
    }
    weights(a) = std::sqrt(j);
  }
  Eigen::VectorXd grid = bath.grid;
  Eigen::MatrixXcd psi = bath.amplitudes;
  const double dk = bath.dk;
  DriveProfile out;
  out.levels = nlev;
  out.f = [grid, psi, weights, dk, coupling_scale,
           nlev](double t) -> Eigen::VectorXcd {
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(nlev);
    for (Eigen::Index a = 0; a < grid.size(); ++a) {
      const Complex phase =
          coupling_scale * weights(a) * dk * std::exp(-kI * (grid(a) * t));
      f += phase * psi.row(a).transpose();
    }
    return f;
  };
  return out;
}

Eigen::MatrixXcd solve_amplitude(const ResolventTrajectory& resolvent,
                                 const model::SystemHamiltonian& h,
                                 const DriveProfile& drive,
                                 const Eigen::VectorXcd& c0) {
  const Eigen::Index nlev = resolvent.levels();
  if (c0.size() != nlev || drive.levels != nlev ||
      h.levels() != nlev) {
    throw GridMismatch("amplitude solve needs matching level counts");
  }
  const Eigen::Index n = resolvent.n_samples();
  const double hstep = resolvent.step;
  const Eigen::MatrixXcd& u = resolvent.basis;
  const Eigen::VectorXd& w = resolvent.eigenvalues;

  // Drive rotated into the eigenbasis with its free phase removed:
  // e^{i w_i t} (U^dag f(t))_i, sampled once per grid point.
  Eigen::MatrixXcd ftilde(nlev, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const double t = resolvent.time(m);
    Eigen::VectorXcd fm = u.adjoint() * drive.f(t);
    for (Eigen::Index i = 0; i < nlev; ++i) {
      fm(i) *= std::exp(kI * (w(i) * t));
    }
    ftilde.col(m) = fm;
  }

  const Eigen::VectorXcd d0 = u.adjoint() * c0;
  Eigen::MatrixXcd out(nlev, n);
  for (Eigen::Index idx = 0; idx < n; ++idx) {
    Eigen::VectorXcd d(nlev);
    for (Eigen::Index i = 0; i < nlev; ++i) {
      // Variation of parameters: d_i(t) = v_i(t) d_i(0)
      //   - i int_0^t v_i(t - s) e^{i w_i s} f_i(s) ds (trapezoid).
      Complex conv{0.0, 0.0};
      if (idx > 0) {
        conv += 0.5 * (resolvent.amplitudes(i, idx) * ftilde(i, 0) +
                       resolvent.amplitudes(i, 0) * ftilde(i, idx));
        for (Eigen::Index m = 1; m < idx; ++m) {
          conv += resolvent.amplitudes(i, idx - m) * ftilde(i, m);
        }
        conv *= hstep;
      }
      d(i) = resolvent.amplitudes(i, idx) * d0(i) - kI * conv;
      // Back to the Schroedinger picture.
      d(i) *= std::exp(-kI * (w(i) * resolvent.time(idx)));
    }
    out.col(idx) = u * d;
  }
  return out;
}

}  // namespace rwadyn::volterra
