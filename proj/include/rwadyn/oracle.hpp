#pragma once
// Brute-force cross-validation route: replace each reservoir by M discrete
// modes on a frequency window, build the conserved-excitation sector
// Hamiltonian (dimension N + N*M), diagonalize it once, and read reduced
// states off the exact finite-dimensional evolution.  Shares no numerics
// with the kernel-based propagation it validates.

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "rwadyn/kernels.hpp"
#include "rwadyn/model.hpp"

namespace rwadyn::oracle {

using Complex = std::complex<double>;

struct DiscreteBath {
  Eigen::VectorXd frequencies;  // midpoint grid over the window
  Eigen::VectorXd couplings;    // g_m = sqrt(J(w_m) dw)
  Eigen::VectorXd occupations;  // occupation profile sampled at w_m, raw
  double window_lo = 0.0;
  double window_hi = 0.0;
  double domega = 0.0;
  // Beyond this horizon the discrete model departs from the continuum
  // (excitation returns from the frequency mesh): 2 pi / dw.
  double recurrence_time = 0.0;
  // Captured fraction of the coupling mass (integral of J) and of the
  // occupied mass (integral of J * rho) inside the window.
  double coupling_coverage = 1.0;
  double occupied_coverage = 1.0;
};

struct DiscretizeOptions {
  int modes = 200;
  double window_lo = 0.0;
  double window_hi = 0.0;
  // Hard floor on the occupied-mass coverage; falling short throws
  // WindowTooNarrow.  Coupling-mass coverage below the same figure is
  // reported in the result but is not an error (heavy-tailed densities
  // never reach it on a finite window).
  double occupied_coverage_min = 0.999;
};

DiscreteBath discretize_bath(const model::SpectralDensity& density,
                             const model::OccupationProfile& occupation,
                             const DiscretizeOptions& opt);

class DiscreteBathOracle {
public:
  // Builds and diagonalizes the sector Hamiltonian; coupling_scale is the
  // coupling strength lambda (couplings enter as lambda * g_m).
  DiscreteBathOracle(const model::SystemHamiltonian& system,
                     const DiscreteBath& bath, double coupling_scale,
                     Eigen::Index max_dimension = 5000);

  Eigen::Index levels() const { return levels_; }
  Eigen::Index modes() const { return bath_.frequencies.size(); }
  Eigen::Index dimension() const { return evals_.size(); }
  const DiscreteBath& bath() const { return bath_; }

  // Excited-to-excited propagator block A(t), N x N.
  Eigen::MatrixXcd system_block(double t) const;
  // Excited-row, one-excitation-column block, N x (N M).
  Eigen::MatrixXcd system_bath_block(double t) const;

  // Reduced state of the mixed initial condition at time t.  A diagonal
  // occupation profile is sampled at the mode frequencies; a general grid
  // state must live on this oracle's grid (GridMismatch otherwise) and
  // contributes its matrix weights rho * dk.
  model::BlockDensityMatrix reduced_state(const model::InitialState& state,
                                          double t) const;
  std::vector<model::BlockDensityMatrix> reduced_states(
      const model::InitialState& state, const std::vector<double>& times) const;

  // System amplitudes of a pure one-excitation state: c0 on the excited
  // levels plus bath amplitudes psi(a, j) on the grid.
  Eigen::VectorXcd excitation_amplitude(const Eigen::VectorXcd& c0,
                                        const Eigen::MatrixXcd& psi0,
                                        double t) const;

private:
  Eigen::Index levels_ = 0;
  DiscreteBath bath_;
  Eigen::VectorXd evals_;   // sector eigenvalues, dimension D
  Eigen::MatrixXcd qs_;     // first N rows of the eigenvector matrix
  Eigen::MatrixXcd qb_;     // remaining N M rows
  Eigen::VectorXcd phases(double t) const;
};

}  // namespace rwadyn::oracle
