#pragma once
// Reservoir kernels: the scalar memory kernel G(t) = int J(w) e^{-iwt} dw
// with its one-sided Laplace transform, the occupied spectral density
// J(w) rho(w), and the two-time correlation kernel of the one-excitation
// bath state.

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <vector>

#include "rwadyn/errors.hpp"
#include "rwadyn/model.hpp"

namespace rwadyn::kernels {

using Complex = std::complex<double>;

// Memory kernel of identical reservoirs.  Scalar because every excited
// level couples to its own copy of the same reservoir; the matrix-valued
// kernel is G(t) times the identity.  All shipped density families admit
// closed forms for G, its Laplace transform and the transform's derivative,
// so no numerical quadrature enters here.
class MemoryKernel {
public:
  static MemoryKernel from_density(model::SpectralDensity density);
  static MemoryKernel zero();

  // G(t); negative arguments use G(-t) = conj(G(t)).
  Complex operator()(double t) const;
  // int_0^inf G(t) e^{-pt} dt for Re p >= 0.  Throws DivergentLaplace in
  // the left half plane and at a hard support edge on the imaginary axis;
  // evaluation exactly on a kink frequency is nudged off by 1e-9.
  Complex laplace(Complex p) const;
  Complex laplace_derivative(Complex p) const;
  // G(0) = integral of J.
  double coupling_mass() const;
  bool vanishing() const;
  // Same kernel with the density multiplied by `factor` (coupling scale
  // lambda enters as factor = lambda^2).
  MemoryKernel scaled(double factor) const;
  const model::SpectralDensity& density() const { return density_; }
  double prefactor() const { return prefactor_; }

private:
  MemoryKernel(model::SpectralDensity d, double prefactor)
      : density_(std::move(d)), prefactor_(prefactor) {}
  model::SpectralDensity density_;
  double prefactor_ = 1.0;
};

// Occupied spectral density J(w) * rho(w) for identical diagonal
// occupations; the object the long-time stationary state is built from.
class NonvacuumDensity {
public:
  NonvacuumDensity(model::SpectralDensity density,
                   model::OccupationProfile occupation);

  double operator()(double w) const;
  double derivative(double w) const;
  // Intersection of the two supports; empty (lo >= hi) when disjoint.
  model::Interval window() const { return window_; }
  double total_integral() const;
  bool smooth() const;
  bool is_zero() const;
  // True when w lies within tol of a non-differentiable point.
  bool near_kink(double w, double tol) const;
  // All non-differentiable frequencies of the product, sorted.
  const std::vector<double>& kink_points() const { return kinks_; }
  const model::SpectralDensity& density() const { return density_; }
  const model::OccupationProfile& occupation() const { return occupation_; }

private:
  model::SpectralDensity density_;
  model::OccupationProfile occupation_;
  model::Interval window_;
  std::vector<double> kinks_;
};

// Two-time correlation kernel K(s, s') of the one-excitation bath state,
// an N x N matrix over the excited levels with K(s, s')^dag = K(s', s).
// For identical diagonal occupations it is a scalar function of s - s'
// times the identity; for a general grid state it is a finite double sum
// over the grid.
class CorrelationKernel {
public:
  static CorrelationKernel diagonal(NonvacuumDensity occupied_density,
                                    Eigen::Index levels);
  static CorrelationKernel general(const model::SpectralDensity& density,
                                   model::GeneralGridOccupation state);

  Eigen::MatrixXcd operator()(double s, double sp) const;
  bool diagonal_identical() const { return general_ == nullptr; }
  Eigen::Index levels() const { return levels_; }

  // Diagonal case: the scalar k(tau) with K(s, s') = k(s - s') * I.
  Complex scalar(double tau) const;
  const NonvacuumDensity& occupied_density() const;

  // General case accessors for the factorized propagation path.
  const model::GeneralGridOccupation& grid_state() const;
  const Eigen::VectorXd& mode_couplings() const;  // sqrt(J(w_a))

private:
  CorrelationKernel() = default;
  Eigen::Index levels_ = 0;
  // diagonal branch
  std::shared_ptr<const NonvacuumDensity> occupied_;
  // general branch
  std::shared_ptr<const model::GeneralGridOccupation> general_;
  Eigen::VectorXd couplings_;
};

// Regulated evaluation of the kernel's Laplace transform: the frequency
// integral with Re p shifted by epsilon in {1e-2, 5e-3, 2.5e-3} and a
// two-level Richardson table removing the O(eps) and O(eps^2) errors.
// Exists as an independent cross-check of the closed forms.
Complex laplace_regulated(const MemoryKernel& kernel, Complex p);

}  // namespace rwadyn::kernels
