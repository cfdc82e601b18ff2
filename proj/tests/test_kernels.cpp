#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "rwadyn/kernels.hpp"
#include "rwadyn/quadrature.hpp"

using namespace rwadyn;
using kernels::MemoryKernel;
using kernels::NonvacuumDensity;
using kernels::CorrelationKernel;
using model::SpectralDensity;
using model::OccupationProfile;
using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

TEST_CASE("lorentzian memory kernel closed form") {
  auto g = MemoryKernel::from_density(SpectralDensity::lorentzian(0.1, 2.0, 1.0));
  CHECK(g.coupling_mass() == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(std::abs(g(0.0) - Complex{0.1, 0.0}) < 1e-15);
  const Complex expect = 0.1 * std::exp(-1.0) * std::exp(-kI * 2.0);
  CHECK(std::abs(g(1.0) - expect) < 1e-15);
  // Negative times by conjugate symmetry.
  CHECK(std::abs(g(-1.0) - std::conj(g(1.0))) < 1e-15);
}

TEST_CASE("memory kernel magnitude never exceeds its t=0 value") {
  std::vector<MemoryKernel> family;
  family.push_back(
      MemoryKernel::from_density(SpectralDensity::lorentzian(0.3, -1.0, 0.7)));
  family.push_back(
      MemoryKernel::from_density(SpectralDensity::flat_window(0.3, -2.0, 2.0)));
  Eigen::VectorXd grid(4), values(4);
  grid << -1.0, 0.0, 1.5, 3.0;
  values << 0.0, 0.8, 0.2, 0.0;
  family.push_back(
      MemoryKernel::from_density(SpectralDensity::tabulated(grid, values)));
  for (const auto& g : family) {
    const double mass = g.coupling_mass();
    CHECK(std::abs(g(0.0).real() - mass) < 1e-12 * mass);
    CHECK(std::abs(g(0.0).imag()) < 1e-12 * mass);
    for (double t = 0.05; t < 30.0; t += 0.37) {
      CHECK(std::abs(g(t)) <= mass * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("window and table kernels match direct quadrature") {
  auto flat =
      MemoryKernel::from_density(SpectralDensity::flat_window(0.3, -2.0, 2.0));
  // Window centred at zero: G(t) = 0.3 * 2 sin(2t) / t, real.
  CHECK(std::abs(flat(1.0) - Complex{0.6 * std::sin(2.0), 0.0}) < 1e-13);

  Eigen::VectorXd grid(3), values(3);
  grid << 0.0, 1.0, 2.0;
  values << 0.0, 1.0, 0.0;
  auto tent = MemoryKernel::from_density(SpectralDensity::tabulated(grid, values));
  for (double t : {0.0, 1e-7, 0.3, 1.7, 12.0}) {
    auto direct = quad::integrate(
        [&](double w) {
          return tent.density()(w) * std::exp(-kI * (w * t));
        },
        0.0, 2.0, 1e-13, 1e-12, 4000);
    CHECK(std::abs(tent(t) - direct.value) < 1e-11);
  }
}

TEST_CASE("laplace transform closed forms") {
  auto g = MemoryKernel::from_density(SpectralDensity::lorentzian(0.1, 0.0, 1.0));
  CHECK(std::abs(g.laplace(Complex{1.0, 0.0}) - Complex{0.05, 0.0}) < 1e-15);
  CHECK(std::abs(g.laplace_derivative(Complex{1.0, 0.0}) -
                 Complex{-0.025, 0.0}) < 1e-15);
  // On the imaginary axis the real part is pi J(w).
  const Complex at = g.laplace(-kI * 0.5);
  CHECK(at.real() == doctest::Approx(0.08).epsilon(1e-12));
}

TEST_CASE("boundary value Re Glap(-i w) = pi J(w) across families") {
  auto check = [](const MemoryKernel& g, double w) {
    const Complex val = g.laplace(-kI * w);
    CHECK(val.real() ==
          doctest::Approx(std::numbers::pi * g.prefactor() * g.density()(w))
              .epsilon(1e-8));
  };
  check(MemoryKernel::from_density(SpectralDensity::lorentzian(0.2, 0.5, 1.3)),
        0.8);
  auto flat =
      MemoryKernel::from_density(SpectralDensity::flat_window(0.3, -2.0, 2.0));
  check(flat, 1.0);
  check(flat, -0.7);
  // Principal value part of the window: -0.3 ln 3 at w = 1.
  CHECK(flat.laplace(-kI * 1.0).imag() ==
        doctest::Approx(0.3 * std::log(3.0)).epsilon(1e-12));
  Eigen::VectorXd grid(3), values(3);
  grid << -1.0, 0.5, 2.0;
  values << 0.0, 0.9, 0.0;
  auto tent = MemoryKernel::from_density(SpectralDensity::tabulated(grid, values));
  check(tent, 0.1);
  check(tent, 1.2);
}

TEST_CASE("laplace transform divergence and kink handling") {
  auto flat =
      MemoryKernel::from_density(SpectralDensity::flat_window(0.3, -2.0, 2.0));
  CHECK_THROWS_AS(flat.laplace(Complex{-0.5, 0.0}), DivergentLaplace);
  // Hard support edge on the imaginary axis: log-divergent.
  CHECK_THROWS_AS(flat.laplace(-kI * 2.0), DivergentLaplace);

  Eigen::VectorXd grid(3), values(3);
  grid << 0.0, 1.0, 2.0;
  values << 0.0, 1.0, 0.0;
  auto tent = MemoryKernel::from_density(SpectralDensity::tabulated(grid, values));
  // Endpoint node with J = 0: finite, handled by the nudge.
  CHECK(std::isfinite(tent.laplace(-kI * 0.0).real()));
  // Interior kink: finite, real part still pi J.
  const Complex at_kink = tent.laplace(-kI * 1.0);
  CHECK(at_kink.real() == doctest::Approx(std::numbers::pi).epsilon(1e-6));
}

TEST_CASE("regulated transform cross-checks the closed forms") {
  auto lor =
      MemoryKernel::from_density(SpectralDensity::lorentzian(0.1, 0.0, 1.0));
  const Complex p{0.3, -0.4};
  CHECK(std::abs(kernels::laplace_regulated(lor, p) - lor.laplace(p)) < 1e-4);

  auto flat =
      MemoryKernel::from_density(SpectralDensity::flat_window(0.3, -2.0, 2.0));
  const Complex q{1.0, 0.0};
  CHECK(std::abs(kernels::laplace_regulated(flat, q) - flat.laplace(q)) < 1e-6);
  CHECK(flat.laplace(q).real() ==
        doctest::Approx(0.6 * std::atan(2.0)).epsilon(1e-13));
  // On the imaginary axis, away from the edges.
  const Complex r = -kI * 0.4;
  CHECK(std::abs(kernels::laplace_regulated(flat, r) - flat.laplace(r)) < 2e-3);
}

TEST_CASE("scaled kernel multiplies the density") {
  auto g = MemoryKernel::from_density(SpectralDensity::lorentzian(0.1, 0.0, 1.0));
  auto s = g.scaled(0.25);
  CHECK(std::abs(s(1.3) - 0.25 * g(1.3)) < 1e-16);
  CHECK(std::abs(s.laplace(Complex{1.0, 0.0}) -
                 0.25 * g.laplace(Complex{1.0, 0.0})) < 1e-16);
  CHECK(s.coupling_mass() == doctest::Approx(0.025));
  CHECK_THROWS_AS(g.scaled(-1.0), ConfigError);
}

TEST_CASE("zero kernel") {
  auto z = MemoryKernel::zero();
  CHECK(z.vanishing());
  CHECK(z(0.7) == Complex{0.0, 0.0});
  CHECK(z.laplace(Complex{0.0, 1.0}) == Complex{0.0, 0.0});
  CHECK(z.coupling_mass() == 0.0);
}

TEST_CASE("occupied spectral density product rule") {
  NonvacuumDensity jr(SpectralDensity::lorentzian(0.1, 0.0, 1.0),
                      OccupationProfile::gaussian(0.5, 0.2, 2.0));
  CHECK(jr(0.3) == doctest::Approx(SpectralDensity::lorentzian(0.1, 0.0, 1.0)(0.3) *
                                   OccupationProfile::gaussian(0.5, 0.2, 2.0)(0.3)));
  // Derivative against a central difference.
  const double h = 1e-6;
  const double fd = (jr(0.3 + h) - jr(0.3 - h)) / (2.0 * h);
  CHECK(jr.derivative(0.3) == doctest::Approx(fd).epsilon(1e-7));
  CHECK(jr.smooth());
  CHECK_FALSE(jr.is_zero());
  // Window comes from the occupation (the Lorentzian is unbounded).
  auto w = jr.window();
  CHECK(w.lo == doctest::Approx(0.2 - 17.0));
  CHECK(w.hi == doctest::Approx(0.2 + 17.0));

  NonvacuumDensity kinked(SpectralDensity::flat_window(0.3, -2.0, 2.0),
                          OccupationProfile::gaussian(0.5, 0.2, 2.0));
  CHECK_FALSE(kinked.smooth());
  CHECK(kinked.near_kink(2.0, 1e-9));
  CHECK(kinked.near_kink(1.9999999995, 1e-9));
  CHECK_FALSE(kinked.near_kink(1.5, 1e-9));

  NonvacuumDensity none(SpectralDensity::lorentzian(0.1, 0.0, 1.0),
                        OccupationProfile::zero());
  CHECK(none.is_zero());
  CHECK(none.total_integral() == 0.0);
}

TEST_CASE("diagonal correlation kernel matches a fine discrete sum") {
  NonvacuumDensity jr(SpectralDensity::lorentzian(0.1, 0.4, 1.0),
                      OccupationProfile::gaussian(0.0998, 0.2, 2.0));
  auto k = CorrelationKernel::diagonal(jr, 2);
  CHECK(k.diagonal_identical());
  CHECK(k.levels() == 2);

  // Independent route: midpoint Riemann sum over a wide window.
  auto discrete = [&jr](double tau) {
    const int m = 20001;
    const double lo = -30.0, hi = 30.0;
    const double dw = (hi - lo) / m;
    Complex sum{0.0, 0.0};
    for (int a = 0; a < m; ++a) {
      const double w = lo + (a + 0.5) * dw;
      sum += jr(w) * std::exp(-kI * (w * tau)) * dw;
    }
    return sum;
  };
  for (double tau : {0.0, 0.5, 2.0, 7.0}) {
    CHECK(std::abs(k.scalar(tau) - discrete(tau)) < 1e-6);
  }
  // Conjugate symmetry and the identity-matrix structure.
  CHECK(std::abs(k.scalar(-2.0) - std::conj(k.scalar(2.0))) < 1e-12);
  Eigen::MatrixXcd mat = k(1.3, 0.5);
  CHECK(std::abs(mat(0, 0) - k.scalar(0.8)) < 1e-12);
  CHECK(std::abs(mat(0, 1)) == 0.0);
}

TEST_CASE("general correlation kernel symmetry and positivity") {
  std::mt19937 rng(20260404);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n_res = 2, m = 3;
  model::GeneralGridOccupation occ;
  occ.grid = Eigen::VectorXd::LinSpaced(m, -1.0, 1.0);
  occ.dk = 1.0;
  occ.n_reservoirs = n_res;
  Eigen::MatrixXcd a(n_res * m, n_res * m);
  for (int i = 0; i < n_res * m; ++i) {
    for (int j = 0; j < n_res * m; ++j) {
      a(i, j) = Complex{u(rng), u(rng)};
    }
  }
  occ.rho = a * a.adjoint();  // PSD by construction
  auto k = CorrelationKernel::general(
      SpectralDensity::flat_window(0.3, -2.0, 2.0), occ);
  CHECK_FALSE(k.diagonal_identical());
  Eigen::MatrixXcd k12 = k(0.7, 1.9);
  Eigen::MatrixXcd k21 = k(1.9, 0.7);
  CHECK(linalg::max_abs(k12.adjoint() - k21) < 1e-12);
  // Equal-time kernel is a Gram matrix, hence PSD.
  CHECK(linalg::min_hermitian_eigenvalue(k(1.3, 1.3)) > -1e-12);
}

TEST_CASE("general kernel converges to the diagonal kernel") {
  // Diagonal occupation discretized on a grid approaches the continuum
  // diagonal kernel as the grid refines.
  auto j = SpectralDensity::lorentzian(0.1, 0.0, 1.0);
  auto prof = OccupationProfile::gaussian(0.0998, 0.2, 2.0);
  const int m = 401;
  model::GeneralGridOccupation occ;
  occ.grid = Eigen::VectorXd::LinSpaced(m, -12.0, 12.0);
  occ.dk = occ.grid(1) - occ.grid(0);
  occ.n_reservoirs = 1;
  Eigen::VectorXcd diag(m);
  for (int a = 0; a < m; ++a) diag(a) = prof(occ.grid(a)) / occ.dk;
  occ.rho = diag.asDiagonal();
  auto general = CorrelationKernel::general(j, occ);
  auto diagonal =
      CorrelationKernel::diagonal(NonvacuumDensity(j, prof), 1);
  for (double tau : {0.0, 0.4, 1.1}) {
    CHECK(std::abs(general(tau, 0.0)(0, 0) - diagonal.scalar(tau)) < 2e-3);
  }
}
