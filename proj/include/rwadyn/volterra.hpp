#pragma once
// Resolvent of the memory-kernel Volterra equation.  Because the kernel is
// scalar, the matrix-valued resolvent V(t) with V'(t) =
// -int_0^t G(t-s) e^{iH(t-s)} V(s) ds is a function of the system
// Hamiltonian: in its eigenbasis the equation decouples into one scalar
// Volterra equation per eigenvalue, which an implicit trapezoid scheme
// integrates with O(h^2) global accuracy.

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

#include "rwadyn/kernels.hpp"
#include "rwadyn/model.hpp"

namespace rwadyn::volterra {

using Complex = std::complex<double>;

struct SolveOptions {
  double step = 1e-3;
  double horizon = 1.0;
  // Convolution lags with |G(l h)| below this fraction of |G(0)| are
  // dropped; both the dense and the streaming solver apply the identical
  // cutoff, so their outputs agree bitwise.
  double lag_cutoff = 1e-15;
};

// One-step-at-a-time solver holding only the ring of past values each lag
// window needs; the dense solver below records its outputs, so the two
// produce identical numbers by construction.
class ResolventStream {
public:
  ResolventStream(const model::SystemHamiltonian& h,
                  const kernels::MemoryKernel& kernel,
                  const SolveOptions& opt);

  void advance();
  Eigen::Index index() const { return n_; }
  double time() const { return static_cast<double>(n_) * step_; }
  double step() const { return step_; }
  Eigen::Index total_steps() const { return total_; }
  bool done() const { return n_ >= total_; }
  // Interaction-picture amplitudes v_i(t_n) per eigenvalue.
  const Eigen::VectorXcd& current() const { return v_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXcd& basis() const { return basis_; }
  Eigen::Index lag_window() const { return lag_; }

private:
  double step_ = 0.0;
  Eigen::Index total_ = 0;
  Eigen::Index lag_ = 0;
  Eigen::Index n_ = 0;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXcd basis_;
  // Per eigenvalue: kernel samples K_i[l] = G(l h) e^{i w_i l h}, the ring
  // of recent amplitudes, and the previous convolution value.
  std::vector<std::vector<Complex>> kernel_;
  std::vector<std::vector<Complex>> ring_;
  Eigen::VectorXcd v_;
  Eigen::VectorXcd conv_prev_;
};

// Dense resolvent history on the uniform grid t_n = n * step.
struct ResolventTrajectory {
  double step = 0.0;
  double horizon = 0.0;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd basis;
  // amplitudes(i, n) = v_i(t_n); column 0 is exactly one.
  Eigen::MatrixXcd amplitudes;

  Eigen::Index n_samples() const { return amplitudes.cols(); }
  Eigen::Index levels() const { return amplitudes.rows(); }
  double time(Eigen::Index idx) const {
    return static_cast<double>(idx) * step;
  }
  // V(t_idx) = U diag(v_i) U^dag.
  Eigen::MatrixXcd sample(Eigen::Index idx) const;
  // Largest singular value of V(t_idx) = max_i |v_i|.
  double max_singular(Eigen::Index idx) const;
};

ResolventTrajectory solve_resolvent(const model::SystemHamiltonian& h,
                                    const kernels::MemoryKernel& kernel,
                                    const SolveOptions& opt);

// Self-consistency of the scheme: the same solve at step h and h/2,
// compared at the coarse samples.
struct ConvergenceReport {
  double coarse_step = 0.0;
  double max_deviation = 0.0;
};

ConvergenceReport convergence_report(const model::SystemHamiltonian& h,
                                     const kernels::MemoryKernel& kernel,
                                     const SolveOptions& opt);

// Drive produced by an initial one-excitation bath wavefunction:
// f_j(t) = scale * sum_a sqrt(J(w_a)) psi(a, j) e^{-i w_a t} dk.
struct DriveProfile {
  std::function<Eigen::VectorXcd(double)> f;
  Eigen::Index levels = 0;
};

DriveProfile drive_profile(const model::SpectralDensity& density,
                           const model::BathExcitationProfile& bath,
                           double coupling_scale);

// System amplitudes of the one-excitation sector for initial system
// amplitude c0 and the given drive, using the resolvent by variation of
// parameters.  Returns Schroedinger-picture amplitudes c(t_n) column-wise
// on the trajectory's grid.
Eigen::MatrixXcd solve_amplitude(const ResolventTrajectory& resolvent,
                                 const model::SystemHamiltonian& h,
                                 const DriveProfile& drive,
                                 const Eigen::VectorXcd& c0);

}  // namespace rwadyn::volterra
