// Weak-coupling semigroup: closed forms, hypothesis guards, the stationary
// block against the exact resonance integral, and frame invariance.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "rwadyn/bvh.hpp"
#include "rwadyn/kernels.hpp"
#include "rwadyn/linalg.hpp"
#include "rwadyn/model.hpp"
#include "rwadyn/quadrature.hpp"

using namespace rwadyn;
using Complex = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;

model::SystemHamiltonian scalar_system(double omega) {
  Eigen::MatrixXcd h(1, 1);
  h(0, 0) = omega;
  return model::SystemHamiltonian(h);
}

model::SystemHamiltonian two_level_system() {
  Eigen::MatrixXcd h(2, 2);
  h(0, 0) = 0.3;
  h(0, 1) = Complex(0.1, -0.05);
  h(1, 0) = Complex(0.1, 0.05);
  h(1, 1) = -0.2;
  return model::SystemHamiltonian(h);
}

// Transform of the Lorentzian kernel on the oscillation axis.
Complex lorentzian_transform(double kappa, double omega0, double gamma,
                             double w) {
  return kappa * gamma / Complex(gamma, omega0 - w);
}

// Stationary excited population of the scalar problem from the exact
// long-time resonance integral, independent of the semigroup expansion.
double scalar_stationary_exact(const kernels::NonvacuumDensity& occupied,
                               double kappa, double omega0, double gamma,
                               double coupling) {
  const double c2 = coupling * coupling;
  const model::Interval win = occupied.window();
  const auto r = quad::integrate(
      [&](double w) {
        const Complex denom =
            Complex(0.0, -w) + c2 * lorentzian_transform(kappa, omega0, gamma, w);
        return Complex(occupied(w) / std::norm(denom), 0.0);
      },
      win.lo, win.hi, 1e-14, 1e-11, 8000);
  return c2 * r.value.real();
}

}  // namespace

TEST_CASE("scalar drift and renormalization close in the resonant case") {
  const double kappa = 0.1, gamma = 1.0, lambda = 0.3;
  const auto kernel = kernels::MemoryKernel::from_density(
      model::SpectralDensity::lorentzian(kappa, 0.0, gamma));
  const auto gen = bvh::build_generator(scalar_system(0.0), kernel, lambda);

  const double c2 = lambda * lambda;
  CHECK(std::abs(gen.transform_eigs[0] - Complex(kappa, 0.0)) < 1e-14);
  CHECK(std::abs(gen.drift_eigs[0] -
                 Complex(-kappa - c2 * kappa * kappa / gamma, 0.0)) < 1e-14);
  CHECK(std::abs(gen.renorm_eigs[0] -
                 Complex(1.0 + c2 * kappa / gamma, 0.0)) < 1e-14);
  CHECK(std::abs(gen.drift(0, 0) - gen.drift_eigs[0]) < 1e-15);
}

TEST_CASE("detuned transform picks up the closed-form phase") {
  const auto kernel = kernels::MemoryKernel::from_density(
      model::SpectralDensity::lorentzian(0.1, 0.4, 1.0));
  const auto gen = bvh::build_generator(scalar_system(0.3), kernel, 0.2);
  CHECK(std::abs(gen.transform_eigs[0] -
                 lorentzian_transform(0.1, 0.4, 1.0, 0.3)) < 1e-14);
  CHECK(gen.drift_eigs[0].real() < 0.0);
}

TEST_CASE("dissipativity hypothesis is enforced under strict checking") {
  // The system line lies outside the coupling support, so the transform has
  // no real part there.
  const auto kernel = kernels::MemoryKernel::from_density(
      model::SpectralDensity::flat_window(0.2, 1.0, 2.0));
  CHECK_THROWS_AS(bvh::build_generator(scalar_system(0.0), kernel, 0.2),
                  rwadyn::HypothesisViolated);
  CHECK_NOTHROW(bvh::build_generator(scalar_system(0.0), kernel, 0.2,
                                     bvh::HypothesisCheck::warn));
  CHECK_THROWS_AS(bvh::build_generator(scalar_system(0.0), kernel, -0.1),
                  rwadyn::ConfigError);
}

TEST_CASE("stationary block approaches the occupation ratio at weak coupling") {
  const auto density = model::SpectralDensity::lorentzian(0.1, 0.4, 1.0);
  const auto occ = model::OccupationProfile::gaussian(0.15, 0.2, 1.5);
  const kernels::NonvacuumDensity occupied(density, occ);
  const auto kernel = kernels::MemoryKernel::from_density(density);
  const auto system = scalar_system(0.0);

  const auto gen = bvh::build_generator(system, kernel, 1e-3);
  const Eigen::MatrixXcd y = bvh::stationary_excited_block(gen, occupied);
  const double ratio = occupied(0.0) / density(0.0);
  CHECK(std::abs(y(0, 0).real() / ratio - 1.0) < 1e-4);
  CHECK(std::abs(y(0, 0).imag()) < 1e-15);
}

TEST_CASE("stationary defect against the exact integral is second order") {
  const double kappa = 0.1, omega0 = 0.4, gamma = 1.0;
  const auto density = model::SpectralDensity::lorentzian(kappa, omega0, gamma);
  const auto occ = model::OccupationProfile::gaussian(0.15, 0.2, 1.5);
  const kernels::NonvacuumDensity occupied(density, occ);
  const auto kernel = kernels::MemoryKernel::from_density(density);
  const auto system = scalar_system(0.0);

  // The semigroup's long-time value holds the exact stationary state only to
  // an O(coupling^2) band: the renormalized source samples the occupation at
  // the shifted frequency but cannot reproduce the short-time memory
  // background (the exact integral's full second-order coefficient).  The
  // checked contract is the band plus its ~4x shrink per coupling halving.
  double dev[3];
  const double lambdas[3] = {0.4, 0.2, 0.1};
  for (int k = 0; k < 3; ++k) {
    const auto gen = bvh::build_generator(system, kernel, lambdas[k]);
    const double approx =
        bvh::stationary_excited_block(gen, occupied)(0, 0).real();
    const double exact =
        scalar_stationary_exact(occupied, kappa, omega0, gamma, lambdas[k]);
    dev[k] = std::abs(approx - exact);
    CHECK(dev[k] < 0.05 * lambdas[k] * lambdas[k]);
  }
  CHECK(dev[1] < 0.35 * dev[0]);
  CHECK(dev[2] < 0.35 * dev[1]);
}

TEST_CASE("stationary solve satisfies its equation and its diagonal form") {
  const auto density = model::SpectralDensity::lorentzian(0.1, 0.4, 1.0);
  const auto occ = model::OccupationProfile::gaussian(0.15, 0.2, 1.5);
  const kernels::NonvacuumDensity occupied(density, occ);
  const auto kernel = kernels::MemoryKernel::from_density(density);
  const auto system = two_level_system();
  const double lambda = 0.3;

  const auto gen = bvh::build_generator(system, kernel, lambda);
  const Eigen::MatrixXcd y = bvh::stationary_excited_block(gen, occupied);

  CHECK(linalg::hermiticity_defect(y) < 1e-14);
  CHECK(linalg::min_hermitian_eigenvalue(y) > -1e-12);

  const double c2 = lambda * lambda;
  Eigen::VectorXd src(2);
  Eigen::VectorXcd diag(2);
  for (int i = 0; i < 2; ++i) {
    const double w = gen.frequencies[i];
    const double m =
        occupied(w) + c2 * occupied.derivative(w) * gen.drift_eigs[i].imag();
    src[i] = std::norm(gen.renorm_eigs[i]) * m;
    diag[i] = kPi * src[i] / (-gen.drift_eigs[i].real());
  }
  const Eigen::MatrixXcd q =
      gen.basis * (-2.0 * kPi * src).asDiagonal().toDenseMatrix() *
      gen.basis.adjoint();
  const Eigen::MatrixXcd residual =
      gen.drift * y + y * gen.drift.adjoint() - q;
  CHECK(linalg::max_abs(residual) < 1e-12);

  const Eigen::MatrixXcd closed =
      gen.basis * diag.asDiagonal() * gen.basis.adjoint();
  CHECK(linalg::max_abs(y - closed) < 1e-11);
}

TEST_CASE("semigroup interpolates the renormalized start and the target") {
  const auto density = model::SpectralDensity::lorentzian(0.1, 0.4, 1.0);
  const auto occ = model::OccupationProfile::gaussian(0.15, 0.2, 1.5);
  const kernels::NonvacuumDensity occupied(density, occ);
  const auto kernel = kernels::MemoryKernel::from_density(density);
  const auto system = two_level_system();

  const auto gen = bvh::build_generator(system, kernel, 0.3);
  const Eigen::MatrixXcd y = bvh::stationary_excited_block(gen, occupied);

  model::InitialState state;
  state.p = 0.5;
  Eigen::MatrixXcd sigma(3, 3);
  sigma << 0.3, Complex(0.1, 0.05), 0.05,
      Complex(0.1, -0.05), 0.4, Complex(0.0, 0.1),
      0.05, Complex(0.0, -0.1), 0.3;
  state.sigma = sigma;
  state.occupation = occ;

  const auto at0 = bvh::semigroup_blocks(gen, state, y, 0.0);
  const Eigen::MatrixXcd see = sigma.block(1, 1, 2, 2);
  const Eigen::RowVectorXcd s0e = sigma.block(0, 1, 1, 2);
  const Eigen::MatrixXcd r = gen.renormalization;
  CHECK(linalg::max_abs(at0.rhoee - Eigen::MatrixXcd(
                                        r * (0.5 * see) * r.adjoint())) <
        1e-14);
  CHECK(linalg::max_abs(at0.rho0e -
                        Eigen::RowVectorXcd(0.5 * s0e * r.adjoint())) < 1e-14);
  CHECK(at0.trace_residual() < 1e-15);

  const auto late = bvh::semigroup_blocks(gen, state, y, 400.0);
  const auto limit = bvh::asymptotic_blocks(state, y);
  CHECK(linalg::max_abs(late.rhoee - limit.rhoee) < 1e-12);
  CHECK(linalg::max_abs(late.rho0e) < 1e-12);
  CHECK(std::abs(limit.rho00 - (1.0 - limit.rhoee.trace().real())) == 0.0);

  CHECK_THROWS_AS(bvh::semigroup_blocks(gen, state, y, -1.0),
                  rwadyn::DomainError);
  CHECK_THROWS_AS(
      bvh::semigroup_excited_block(gen, Eigen::MatrixXcd::Identity(3, 3), 0.5,
                                   y, 1.0),
      rwadyn::GridMismatch);
}

TEST_CASE("drift-shifted sampling refuses a kink at a system frequency") {
  const auto density = model::SpectralDensity::lorentzian(0.1, 0.0, 1.0);
  const auto occ = model::OccupationProfile::window(0.2, -0.5, 0.5);
  const kernels::NonvacuumDensity occupied(density, occ);
  const auto kernel = kernels::MemoryKernel::from_density(density);
  const auto gen = bvh::build_generator(scalar_system(0.5), kernel, 0.2);
  CHECK_THROWS_AS(bvh::stationary_excited_block(gen, occupied),
                  rwadyn::NonSmoothOccupation);
}

TEST_CASE("resolvent approaches its semigroup form faster than second order") {
  const auto density = model::SpectralDensity::lorentzian(0.1, 0.4, 1.0);
  const auto kernel = kernels::MemoryKernel::from_density(density);
  const auto system = scalar_system(0.3);
  const std::vector<double> taus = {0.5, 1.0, 1.5, 2.0};

  double err[2], err0[2];
  const double lambdas[2] = {0.25, 0.125};
  for (int k = 0; k < 2; ++k) {
    const double c2 = lambdas[k] * lambdas[k];
    volterra::SolveOptions sopt;
    sopt.step = 2e-3;
    sopt.horizon = 2.0 / c2;
    const auto traj = volterra::solve_resolvent(
        system, kernels::MemoryKernel::from_density(density.scaled(c2)), sopt);
    const auto gen = bvh::build_generator(system, kernel, lambdas[k]);
    const auto gen0 = bvh::build_generator(system, kernel, 0.0);
    err[k] = bvh::resolvent_asymptotic_error(traj, gen, lambdas[k], taus);
    err0[k] = bvh::resolvent_asymptotic_error(traj, gen0, lambdas[k], taus);
  }
  // Renormalized form: the residual shrinks faster than the coupling square.
  CHECK(err[1] < 0.5 * err[0]);
  CHECK(err[1] / (lambdas[1] * lambdas[1]) <
        0.8 * err[0] / (lambdas[0] * lambdas[0]));
  // Truncated form keeps its second-order floor.
  const double ratio0 = err0[1] / err0[0];
  CHECK(ratio0 > 0.1);
  CHECK(ratio0 < 0.6);

  // Beyond-horizon request is refused.
  volterra::SolveOptions sopt;
  sopt.step = 2e-3;
  sopt.horizon = 1.0;
  const auto traj = volterra::solve_resolvent(
      system, kernels::MemoryKernel::from_density(density.scaled(0.0625)),
      sopt);
  const auto gen = bvh::build_generator(system, kernel, 0.25);
  CHECK_THROWS_AS(
      bvh::resolvent_asymptotic_error(traj, gen, 0.25, {2.0}),
      rwadyn::HorizonMismatch);
  CHECK_THROWS_AS(bvh::resolvent_asymptotic_error(traj, gen, 0.0, {0.5}),
                  rwadyn::ConfigError);
}

TEST_CASE("block trace distance is invariant under the frame rotation") {
  const auto system = two_level_system();
  model::BlockDensityMatrix a, b;
  a.t = b.t = 1.7;
  a.rho00 = 0.4;
  a.rho0e = Eigen::RowVectorXcd(2);
  a.rho0e << Complex(0.1, 0.02), Complex(-0.05, 0.04);
  a.rhoee = Eigen::MatrixXcd(2, 2);
  a.rhoee << 0.35, Complex(0.02, -0.01), Complex(0.02, 0.01), 0.25;
  b.rho00 = 0.5;
  b.rho0e = Eigen::RowVectorXcd(2);
  b.rho0e << Complex(0.07, -0.01), Complex(0.0, 0.06);
  b.rhoee = Eigen::MatrixXcd(2, 2);
  b.rhoee << 0.3, Complex(-0.04, 0.02), Complex(-0.04, -0.02), 0.2;

  const auto fa = bvh::interaction_frame(a, system);
  const auto fb = bvh::interaction_frame(b, system);
  CHECK(std::abs(model::block_trace_distance(a, b) -
                 model::block_trace_distance(fa, fb)) < 1e-13);
  CHECK(fa.rho00 == a.rho00);
  CHECK(std::abs(fa.rhoee.trace() - a.rhoee.trace()) < 1e-14);
}
