#pragma once
// Dense linear-algebra kernels used throughout: Hermitian eigensolves,
// scalar functions of Hermitian matrices, a general matrix exponential and
// a Sylvester-type solver for L Y + Y L^dag = X.  Eigen supplies the
// factorizations; this layer adds the checks and fallbacks the callers rely
// on.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

#include "rwadyn/errors.hpp"

namespace rwadyn::linalg {

using Complex = std::complex<double>;

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return 0.0;
  return a.derived().cwiseAbs().maxCoeff();
}

// Hermitian part (A + A^dag) / 2 as a plain matrix.
template <class Derived>
Eigen::MatrixXcd hermitize(const Eigen::MatrixBase<Derived>& a) {
  Eigen::MatrixXcd m = a.derived().template cast<Complex>();
  return 0.5 * (m + m.adjoint());
}

// Deviation from Hermitian symmetry relative to the matrix scale.
template <class Derived>
double hermiticity_defect(const Eigen::MatrixBase<Derived>& a) {
  Eigen::MatrixXcd m = a.derived().template cast<Complex>();
  return max_abs(m - m.adjoint());
}

struct HermitianEig {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXcd unitary;     // columns are eigenvectors
};

// Eigendecomposition of a Hermitian matrix.  Rejects inputs whose
// anti-Hermitian part exceeds tol * max(1, scale) instead of silently
// symmetrizing them.
template <class Derived>
HermitianEig hermitian_eig(const Eigen::MatrixBase<Derived>& a,
                           double tol = 1e-10) {
  Eigen::MatrixXcd m = a.derived().template cast<Complex>();
  const double defect = max_abs(m - m.adjoint());
  const double scale = std::max(1.0, max_abs(m));
  if (defect > tol * scale) {
    throw NotHermitian("matrix deviates from Hermitian symmetry by " +
                       std::to_string(defect) + " (tolerance " +
                       std::to_string(tol * scale) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
  if (es.info() != Eigen::Success) {
    throw DomainError("Hermitian eigensolver did not converge");
  }
  return HermitianEig{es.eigenvalues(), es.eigenvectors()};
}

// f(A) for Hermitian A via the spectral decomposition; f maps a real
// eigenvalue to a complex value and must stay finite on the spectrum.
template <class Derived, class F>
Eigen::MatrixXcd apply_scalar_function(const Eigen::MatrixBase<Derived>& a,
                                       F&& f, double tol = 1e-10) {
  HermitianEig eig = hermitian_eig(a, tol);
  const Eigen::Index n = eig.eigenvalues.size();
  Eigen::VectorXcd mapped(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex v = static_cast<Complex>(f(eig.eigenvalues[i]));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw DomainError("scalar function is not finite at eigenvalue " +
                        std::to_string(eig.eigenvalues[i]));
    }
    mapped[i] = v;
  }
  return eig.unitary * mapped.asDiagonal() * eig.unitary.adjoint();
}

namespace detail {

// Pade(6,6) with scaling and squaring; the workhorse when the input is not
// diagonalizable to working accuracy.
inline Eigen::MatrixXcd expm_pade(const Eigen::MatrixXcd& a) {
  static constexpr double c[7] = {1.0,          1.0 / 2.0,    5.0 / 44.0,
                                  1.0 / 66.0,   1.0 / 792.0,  1.0 / 15840.0,
                                  1.0 / 665280.0};
  const Eigen::Index n = a.rows();
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  if (norm > 0.25) {
    s = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  }
  const Eigen::MatrixXcd b = a / std::pow(2.0, s);
  const Eigen::MatrixXcd b2 = b * b;
  const Eigen::MatrixXcd b4 = b2 * b2;
  const Eigen::MatrixXcd b6 = b2 * b4;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd even = c[0] * id + c[2] * b2 + c[4] * b4 + c[6] * b6;
  const Eigen::MatrixXcd odd = b * (c[1] * id + c[3] * b2 + c[5] * b4);
  Eigen::MatrixXcd r = (even - odd).partialPivLu().solve(even + odd);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

// Condition number estimate through singular values; returns +inf for a
// numerically rank-deficient matrix.
inline double condition_estimate(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return svd.singularValues()(0) / smin;
}

}  // namespace detail

// exp(A) for a general complex square matrix.  Hermitian inputs use the
// self-adjoint solver, well-conditioned diagonalizable inputs the spectral
// formula, everything else Pade with scaling and squaring.
template <class Derived>
Eigen::MatrixXcd matrix_exponential(const Eigen::MatrixBase<Derived>& a) {
  Eigen::MatrixXcd m = a.derived().template cast<Complex>();
  const Eigen::Index n = m.rows();
  if (n != m.cols()) {
    throw DomainError("matrix exponential requires a square matrix");
  }
  if (n == 0) return m;
  const double scale = max_abs(m);
  if (scale == 0.0) return Eigen::MatrixXcd::Identity(n, n);
  if (max_abs(m - m.adjoint()) <= 1e-13 * std::max(1.0, scale)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 *
                                                       (m + m.adjoint()));
    if (es.info() == Eigen::Success) {
      Eigen::VectorXcd e =
          es.eigenvalues().array().exp().matrix().cast<Complex>();
      return es.eigenvectors() * e.asDiagonal() * es.eigenvectors().adjoint();
    }
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(m);
  if (ces.info() == Eigen::Success) {
    const Eigen::MatrixXcd& v = ces.eigenvectors();
    if (detail::condition_estimate(v) < 1e8) {
      Eigen::VectorXcd e = ces.eigenvalues().array().exp();
      return v * e.asDiagonal() * v.partialPivLu().solve(
                                      Eigen::MatrixXcd::Identity(n, n));
    }
  }
  return detail::expm_pade(m);
}

namespace detail {

// Solve L Y + Y L^dag = X through the eigendecomposition L = P M P^{-1}.
// Returns false when the transform is unreliable (failed eigensolve or an
// ill-conditioned eigenvector basis) so the caller can fall back.
struct LyapunovTransform {
  Eigen::MatrixXcd p;
  Eigen::VectorXcd mu;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
  bool valid = false;

  explicit LyapunovTransform(const Eigen::MatrixXcd& l) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(l);
    if (ces.info() != Eigen::Success) return;
    p = ces.eigenvectors();
    mu = ces.eigenvalues();
    if (condition_estimate(p) >= 1e8) return;
    lu = Eigen::PartialPivLU<Eigen::MatrixXcd>(p);
    valid = true;
  }

  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& x, double sing_tol) const {
    const Eigen::Index n = mu.size();
    const double scale = std::max(1.0, mu.cwiseAbs().maxCoeff());
    // X~ = P^{-1} X P^{-dag}
    Eigen::MatrixXcd xt = lu.solve(x);
    xt = lu.solve(xt.adjoint()).adjoint();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const Complex d = mu[i] + std::conj(mu[j]);
        if (std::abs(d) <= sing_tol * scale) {
          throw SingularLyapunov(
              "eigenvalue sum mu_i + conj(mu_j) vanishes (|" +
              std::to_string(std::abs(d)) + "|); the stationary equation "
              "has no unique solution");
        }
        xt(i, j) /= d;
      }
    }
    return p * xt * p.adjoint();
  }
};

// Kronecker product, needed only by the dense fallback below.
inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a,
                             const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Vectorized n^2 x n^2 solve of L Y + Y L^dag = X; exact but O(n^6), used
// when the eigenvector basis of L is too ill-conditioned to trust.
inline Eigen::MatrixXcd lyapunov_dense(const Eigen::MatrixXcd& l,
                                       const Eigen::MatrixXcd& x,
                                       double sing_tol) {
  const Eigen::Index n = l.rows();
  if (n > 64) {
    throw DimensionTooLarge(
        "dense stationary solve limited to 64x64 blocks (got " +
        std::to_string(n) + ")");
  }
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  // vec(L Y) = (I (x) L) vec Y, vec(Y L^dag) = (conj L (x) I) vec Y
  Eigen::MatrixXcd op = kron(id, l) + kron(l.conjugate(), id);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(op);
  const double scale = std::max(1.0, max_abs(l));
  lu.setThreshold(sing_tol * scale);
  if (!lu.isInvertible()) {
    throw SingularLyapunov(
        "vectorized stationary operator is singular to working precision");
  }
  Eigen::VectorXcd vx = Eigen::Map<const Eigen::VectorXcd>(x.data(), n * n);
  Eigen::VectorXcd vy = lu.solve(vx);
  return Eigen::Map<const Eigen::MatrixXcd>(vy.data(), n, n);
}

}  // namespace detail

// Solve L Y + Y L^dag = X for Y.  Uses the spectral transform of L with up
// to two steps of iterative refinement; falls back to the vectorized dense
// solve when L cannot be stably diagonalized.  Throws SingularLyapunov when
// the equation is singular (some mu_i + conj(mu_j) = 0).
template <class DerivedL, class DerivedX>
Eigen::MatrixXcd lyapunov_solve(const Eigen::MatrixBase<DerivedL>& l_in,
                                const Eigen::MatrixBase<DerivedX>& x_in,
                                double sing_tol = 1e-12) {
  Eigen::MatrixXcd l = l_in.derived().template cast<Complex>();
  Eigen::MatrixXcd x = x_in.derived().template cast<Complex>();
  if (l.rows() != l.cols() || x.rows() != x.cols() || l.rows() != x.rows()) {
    throw DomainError("stationary solve needs square blocks of equal size");
  }
  if (l.rows() == 0) return x;
  detail::LyapunovTransform tf(l);
  if (!tf.valid) {
    return detail::lyapunov_dense(l, x, sing_tol);
  }
  Eigen::MatrixXcd y = tf.solve(x, sing_tol);
  const double xscale = std::max(1.0, max_abs(x));
  for (int sweep = 0; sweep < 2; ++sweep) {
    Eigen::MatrixXcd residual = x - (l * y + y * l.adjoint());
    if (max_abs(residual) <= 1e-13 * xscale) break;
    y += tf.solve(residual, sing_tol);
  }
  return y;
}

// Sum of singular values.
template <class Derived>
double trace_norm(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return 0.0;
  Eigen::MatrixXcd m = a.derived().template cast<Complex>();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues().sum();
}

// Trace distance (1/2) || A - B ||_1 between two operators.
template <class DerivedA, class DerivedB>
double trace_distance(const Eigen::MatrixBase<DerivedA>& a,
                      const Eigen::MatrixBase<DerivedB>& b) {
  return 0.5 * trace_norm(a.derived().template cast<Complex>() -
                          b.derived().template cast<Complex>());
}

// Smallest eigenvalue of the Hermitian part; used for positivity reporting.
template <class Derived>
double min_hermitian_eigenvalue(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitize(a));
  if (es.info() != Eigen::Success) {
    throw DomainError("Hermitian eigensolver did not converge");
  }
  return es.eigenvalues()(0);
}

}  // namespace rwadyn::linalg
