// Go / no-go gate: ten end-to-end checks at fixed tolerances, printed as one
// line each.  The exit status is the number of failed checks, so the binary
// doubles as a CI gate and as a quick installation health report.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwadyn/bvh.hpp"
#include "rwadyn/kernels.hpp"
#include "rwadyn/linalg.hpp"
#include "rwadyn/model.hpp"
#include "rwadyn/oracle.hpp"
#include "rwadyn/reduced.hpp"
#include "rwadyn/scenario.hpp"
#include "rwadyn/volterra.hpp"

using namespace rwadyn;
using Complex = std::complex<double>;
namespace fs = std::filesystem;

namespace {

struct Gate {
  bool pass = false;
  std::string detail = "did not run";
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, ap);
  va_end(ap);
  return std::string(buf);
}

Eigen::MatrixXcd random_complex(std::mt19937& rng, Eigen::Index n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd x(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) x(r, c) = Complex(gauss(rng), gauss(rng));
  return x;
}

// Random Hermitian with spectral norm exactly `norm`.
Eigen::MatrixXcd random_hermitian(std::mt19937& rng, Eigen::Index n,
                                  double norm) {
  Eigen::MatrixXcd x = random_complex(rng, n);
  Eigen::MatrixXcd h = 0.5 * (x + x.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (top > 0.0) h *= norm / top;
  return h;
}

// Running worst-case over every state series the gate produces; feeds the
// validity check.
struct Validity {
  double worst_trace = 0.0;
  double worst_eig = 0.0;
  int series = 0;
  void absorb(const reduced::StateSeries& s) {
    worst_trace = std::max(worst_trace, s.max_trace_residual);
    worst_eig = std::min(worst_eig, s.min_eigenvalue);
    ++series;
  }
};

// Shared two-level fixture: detuned levels, off-center Lorentzian coupling,
// Gaussian occupation peaked between the transition frequencies.
struct TwoLevelFixture {
  model::SystemHamiltonian system;
  model::SpectralDensity density;
  model::OccupationProfile occupation;

  TwoLevelFixture()
      : system([] {
          Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
          h(1, 1) = 0.4;
          return h;
        }()),
        density(model::SpectralDensity::lorentzian(0.1, 0.2, 1.0)),
        occupation(
            model::OccupationProfile::gaussian(0.19947114020071635, 0.2, 2.0)) {}
};

double closed_form_scalar(double t) {
  // Vacuum survival amplitude for a resonant Lorentzian line of weight 0.1
  // and unit width: damped oscillator with discriminant 1 - 4*0.1.
  const double om = std::sqrt(0.6);
  return std::exp(-0.5 * t) *
         (std::cosh(0.5 * om * t) + std::sinh(0.5 * om * t) / om);
}

double scalar_sup_error(double step) {
  Eigen::MatrixXcd h0 = Eigen::MatrixXcd::Zero(1, 1);
  const model::SystemHamiltonian sys(h0);
  const auto kernel = kernels::MemoryKernel::from_density(
      model::SpectralDensity::lorentzian(0.1, 0.0, 1.0));
  const auto traj = volterra::solve_resolvent(sys, kernel, {step, 10.0, 1e-15});
  double worst = 0.0;
  for (Eigen::Index k = 0; k < traj.n_samples(); ++k)
    worst = std::max(worst, std::abs(traj.amplitudes(0, k) -
                                     closed_form_scalar(traj.time(k))));
  return worst;
}

}  // namespace

int main() {
  std::vector<Gate> gates(10);
  Validity validity;
  const auto describe = [](int i) {
    static const char* names[] = {
        "scalar resolvent matches the damped-oscillator closed form",
        "step halving shows second-order convergence",
        "resolvent stays a contraction on random fixtures",
        "exact dynamics matches the discretized-reservoir brute force",
        "every produced state keeps unit trace and positivity",
        "semigroup resolvent error is o(coupling^2)",
        "long-time state approaches the stationary block",
        "weak-coupling stationary value equals the occupation at resonance",
        "linear-algebra residual bounds hold on random instances",
        "simulate reruns are byte-identical",
    };
    return names[i];
  };

  // 1: closed-form comparison, and 2: order of convergence on the same line.
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const double err_fine = scalar_sup_error(1e-3);
    const double el = seconds_since(t0);
    gates[0].pass = err_fine <= 1e-6 && el < 5.0;
    gates[0].detail = fmt("sup error %.3e (tol 1e-6), %.1f s (budget 5 s)",
                          err_fine, el);

    const double err_coarse = scalar_sup_error(2e-3);
    const double ratio = err_coarse / err_fine;
    gates[1].pass = ratio >= 3.5 && ratio <= 4.5;
    gates[1].detail = fmt("error ratio h=2e-3 / h=1e-3 is %.2f (need [3.5, 4.5])",
                          ratio);
  } catch (const std::exception& e) {
    gates[0].detail = gates[1].detail = e.what();
  }

  // 3: contraction property over random fixtures.
  try {
    std::mt19937 rng(20260822);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst = 0.0;
    for (int f = 0; f < 50; ++f) {
      const auto n = static_cast<Eigen::Index>(1 + rng() % 5);
      const model::SystemHamiltonian sys(
          random_hermitian(rng, n, 3.0 * uni(rng)));
      const auto kernel =
          kernels::MemoryKernel::from_density(model::SpectralDensity::lorentzian(
              0.05 + 0.45 * uni(rng), 2.0 * uni(rng) - 1.0,
              0.5 + 1.5 * uni(rng)));
      const auto traj = volterra::solve_resolvent(sys, kernel, {5e-3, 3.0, 1e-15});
      for (Eigen::Index k = 0; k < traj.n_samples(); k += 25)
        worst = std::max(worst, traj.max_singular(k));
      worst = std::max(worst, traj.max_singular(traj.n_samples() - 1));
    }
    gates[2].pass = worst <= 1.0 + 1e-7;
    gates[2].detail =
        fmt("max singular value %.9f over 50 fixtures (cap 1 + 1e-7)", worst);
  } catch (const std::exception& e) {
    gates[2].detail = e.what();
  }

  // 4: brute-force cross-validation on the two-level fixture.
  const TwoLevelFixture fx;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const auto kernel = kernels::MemoryKernel::from_density(fx.density);
    const auto correlation = kernels::CorrelationKernel::diagonal(
        kernels::NonvacuumDensity(fx.density, fx.occupation), 2);

    oracle::DiscretizeOptions dopt;
    dopt.modes = 400;
    dopt.window_lo = -8.0;
    dopt.window_hi = 8.0;
    const auto bath = oracle::discretize_bath(fx.density, fx.occupation, dopt);
    const oracle::DiscreteBathOracle brute(fx.system, bath, 1.0);
    const double t_max = std::min(20.0, 0.5 * bath.recurrence_time);

    Eigen::MatrixXcd sigma(3, 3);
    sigma << 0.2, Complex(0.1, 0.02), Complex(0.05, -0.03),
        Complex(0.1, -0.02), 0.5, Complex(0.1, 0.05),
        Complex(0.05, 0.03), Complex(0.1, -0.05), 0.3;

    const auto traj =
        volterra::solve_resolvent(fx.system, kernel, {2e-3, 20.0, 1e-15});
    reduced::EvolveOptions opt;
    opt.step = 2e-3;
    opt.horizon = 20.0;
    opt.output_stride = 100;
    opt.refine_check = false;
    opt.base_panels = 48;

    double worst = 0.0;
    for (double p : {1.0, 0.5, 0.0}) {
      model::InitialState state;
      state.p = p;
      state.sigma = sigma;
      state.occupation = fx.occupation;
      const auto series = reduced::evolve_on_trajectory(state, fx.system, traj,
                                                        correlation, opt);
      validity.absorb(series);
      for (const auto& s : series.states) {
        if (s.t > t_max + 1e-12) break;
        worst = std::max(worst, model::block_trace_distance(
                                    s, brute.reduced_state(state, s.t)));
      }
    }
    const double el = seconds_since(t0);
    gates[3].pass = worst <= 5e-3 && el < 120.0;
    gates[3].detail = fmt(
        "trace distance %.3e over p in {1, 0.5, 0}, t <= %.0f (tol 5e-3), "
        "%.0f s (budget 120 s)",
        worst, t_max, el);
  } catch (const std::exception& e) {
    gates[3].detail = e.what();
  }

  // 6: rescaled-time resolvent error against the second-order semigroup,
  // plus the zeroth-order variant's convergence rate.
  try {
    const auto t0 = std::chrono::steady_clock::now();
    Eigen::MatrixXcd h(1, 1);
    h(0, 0) = 0.3;
    const model::SystemHamiltonian sys(h);
    const auto density = model::SpectralDensity::lorentzian(0.1, 0.0, 1.0);
    const auto bare = kernels::MemoryKernel::from_density(density);
    std::vector<double> taus;
    for (int k = 10; k <= 50; ++k) taus.push_back(0.1 * k);

    const bvh::Generator zeroth = bvh::build_generator(sys, bare, 0.0);
    std::vector<double> rel, zero;
    for (double lam : {0.5, 0.25, 0.125}) {
      const double c2 = lam * lam;
      const auto traj = volterra::solve_resolvent(
          sys, kernels::MemoryKernel::from_density(density.scaled(c2)),
          {2.5e-3, 5.0 / c2, 1e-15});
      const bvh::Generator gen = bvh::build_generator(sys, bare, lam);
      rel.push_back(bvh::resolvent_asymptotic_error(traj, gen, lam, taus) / c2);
      zero.push_back(bvh::resolvent_asymptotic_error(traj, zeroth, lam, taus));
    }
    const bool decreasing = rel[1] < rel[0] && rel[2] < rel[1];
    const double r1 = zero[1] / zero[0];
    const double r2 = zero[2] / zero[1];
    const bool zeroth_ok =
        r1 >= 0.1 && r1 <= 0.6 && r2 >= 0.1 && r2 <= 0.6;
    const double el = seconds_since(t0);
    gates[5].pass = decreasing && zeroth_ok && el < 180.0;
    gates[5].detail = fmt(
        "E/lambda^2 = %.2e, %.2e, %.2e (%s); zeroth-order ratios %.2f, %.2f "
        "(need [0.1, 0.6]); %.0f s (budget 180 s)",
        rel[0], rel[1], rel[2],
        decreasing ? "strictly decreasing" : "NOT decreasing", r1, r2, el);
  } catch (const std::exception& e) {
    gates[5].detail = e.what();
  }

  // 7: stationary state reached by the exact dynamics at weak coupling.
  try {
    const auto bare = kernels::MemoryKernel::from_density(fx.density);
    const kernels::NonvacuumDensity occupied(fx.density, fx.occupation);
    // Both transition frequencies sit at the same distance from the line
    // center, so the two relaxation rates coincide.
    const double j_min = std::min(fx.density(0.0), fx.density(0.4));

    std::vector<double> dist;
    for (double lam : {0.1, 0.05}) {
      const double c2 = lam * lam;
      const double rate = 2.0 * std::numbers::pi * c2 * j_min;
      const double horizon = lam == 0.1 ? 10420.0 : 41700.0;
      if (horizon * rate < 20.0)
        throw std::runtime_error("horizon below 20 relaxation times");

      model::InitialState state;
      state.p = 0.0;
      state.sigma = Eigen::MatrixXcd::Zero(3, 3);
      state.sigma(0, 0) = 1.0;
      state.occupation = fx.occupation;

      reduced::EvolveOptions opt;
      opt.step = 1e-2;
      opt.horizon = horizon;
      opt.output_stride = static_cast<Eigen::Index>(horizon / opt.step) / 200;
      opt.refine_check = false;
      opt.base_panels = 48;
      const auto scaled = fx.density.scaled(c2);
      const auto series = reduced::evolve_exact(
          state, fx.system, kernels::MemoryKernel::from_density(scaled),
          kernels::CorrelationKernel::diagonal(
              kernels::NonvacuumDensity(scaled, fx.occupation), 2),
          opt);
      validity.absorb(series);

      Eigen::MatrixXcd tail = Eigen::MatrixXcd::Zero(2, 2);
      int count = 0;
      for (const auto& s : series.states)
        if (s.t >= 0.9 * horizon - 1e-9) {
          tail += s.rhoee;
          ++count;
        }
      tail /= static_cast<double>(count);

      const Eigen::MatrixXcd y = bvh::stationary_excited_block(
          bvh::build_generator(fx.system, bare, lam), occupied);
      dist.push_back(linalg::trace_distance(tail, y));
    }
    gates[6].pass = dist[0] <= 0.01 && dist[1] < dist[0];
    gates[6].detail = fmt(
        "tail distance %.2e at coupling 0.1 (tol 1e-2), %.2e at 0.05 (%s)",
        dist[0], dist[1], dist[1] < dist[0] ? "decreasing" : "NOT decreasing");
  } catch (const std::exception& e) {
    gates[6].detail = e.what();
  }

  // 8: vanishing-coupling limit of the stationary block.
  try {
    Eigen::MatrixXcd h(1, 1);
    h(0, 0) = 0.3;
    const model::SystemHamiltonian sys(h);
    const auto density = model::SpectralDensity::lorentzian(0.1, 0.0, 1.0);
    const auto occ = model::OccupationProfile::gaussian(0.15, 0.0, 1.5);
    const auto y = bvh::stationary_excited_block(
        bvh::build_generator(sys, kernels::MemoryKernel::from_density(density),
                             1e-4),
        kernels::NonvacuumDensity(density, occ));
    const double dev = std::abs(y(0, 0) - Complex(occ(0.3), 0.0));
    gates[7].pass = dev <= 1e-6;
    gates[7].detail =
        fmt("|stationary - occupation(0.3)| = %.2e (tol 1e-6)", dev);
  } catch (const std::exception& e) {
    gates[7].detail = e.what();
  }

  // 9: linear-algebra residual bounds on randomized instances.
  try {
    std::mt19937 rng(19930527);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst_herm = 0.0, worst_lyap = 0.0, worst_group = 0.0;
    for (int k = 0; k < 100; ++k) {
      const auto n = static_cast<Eigen::Index>(1 + rng() % 6);

      const Eigen::MatrixXcd a = random_hermitian(rng, n, 3.0 * uni(rng));
      const Eigen::MatrixXcd fa = linalg::apply_scalar_function(
          a, [](double x) { return Complex(std::cos(1.7 * x) + 0.3 * x, 0.0); });
      worst_herm = std::max(worst_herm, linalg::max_abs(fa - fa.adjoint()));

      Eigen::MatrixXcd l = random_complex(rng, n);
      const double max_re =
          Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(l, false)
              .eigenvalues()
              .real()
              .maxCoeff();
      l -= (max_re + 0.3 + uni(rng)) * Eigen::MatrixXcd::Identity(n, n);
      const Eigen::MatrixXcd x = random_hermitian(rng, n, 2.0);
      const Eigen::MatrixXcd y = linalg::lyapunov_solve(l, x);
      worst_lyap = std::max(
          worst_lyap, linalg::max_abs(l * y + y * l.adjoint() - x) /
                          (1.0 + linalg::max_abs(x)));

      Eigen::MatrixXcd g = random_complex(rng, n);
      const double top = g.jacobiSvd().singularValues()(0);
      if (top > 0.0) g *= 2.0 * uni(rng) / top;
      const double s = uni(rng), t = uni(rng);
      worst_group = std::max(
          worst_group,
          linalg::max_abs(linalg::matrix_exponential(
                              Eigen::MatrixXcd((s + t) * g)) -
                          linalg::matrix_exponential(Eigen::MatrixXcd(s * g)) *
                              linalg::matrix_exponential(
                                  Eigen::MatrixXcd(t * g))));
    }
    gates[8].pass =
        worst_herm <= 1e-10 && worst_lyap <= 1e-12 && worst_group <= 1e-8;
    gates[8].detail = fmt(
        "hermiticity %.1e (tol 1e-10), scaled residual %.1e (tol 1e-12), "
        "group defect %.1e (tol 1e-8), 100 instances each",
        worst_herm, worst_lyap, worst_group);
  } catch (const std::exception& e) {
    gates[8].detail = e.what();
  }

  // 10: deterministic output bytes.
  try {
    const fs::path base = fs::temp_directory_path() / "rwadyn_acceptance";
    fs::remove_all(base);
    const auto sc = scenario::parse_scenario(R"({
      "name": "determinism",
      "system": { "hamiltonian": [[[0.3, 0.0]]] },
      "bath": { "family": "lorentzian", "kappa": 0.1, "omega0": 0.0, "gamma": 1.0 },
      "occupation": { "family": "gaussian", "amplitude": 0.15, "center": 0.0, "sigma": 1.5 },
      "initial": { "p": 0.6, "sigma": [[[0.3,0.0],[0.25,0.1]],[[0.25,-0.1],[0.7,0.0]]] },
      "solver": { "step": 0.01, "horizon": 2.0, "output_stride": 20 },
      "bvh": { "lambdas": [0.5] },
      "outputs": { "directory": ")" + (base / "a").string() + R"(" }
    })");
    const auto run_a = scenario::run_scenario(sc);
    const auto run_b = scenario::run_scenario(sc, base / "b");
    const auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    const std::string bytes_a = slurp(run_a.trajectory_csv);
    gates[9].pass =
        !bytes_a.empty() && bytes_a == slurp(run_b.trajectory_csv);
    gates[9].detail = fmt("%zu byte trajectory, rerun %s", bytes_a.size(),
                          gates[9].pass ? "identical" : "DIFFERS");
    validity.worst_trace = std::max(
        validity.worst_trace,
        run_a.validation["max_trace_residual"].get<double>());
    validity.worst_eig = std::min(
        validity.worst_eig, run_a.validation["min_eigenvalue"].get<double>());
    validity.series += 1;
  } catch (const std::exception& e) {
    gates[9].detail = e.what();
  }

  // 5: validity over everything the gate produced above.
  gates[4].pass = validity.series >= 6 && validity.worst_trace <= 1e-9 &&
                  validity.worst_eig >= -1e-7;
  gates[4].detail = fmt(
      "%d series: worst trace residual %.1e (tol 1e-9), most negative "
      "eigenvalue %.1e (floor -1e-7)",
      validity.series, validity.worst_trace, validity.worst_eig);

  int failures = 0;
  for (int i = 0; i < 10; ++i) {
    if (!gates[i].pass) ++failures;
    std::printf("[%s] %2d  %s: %s\n", gates[i].pass ? "PASS" : "FAIL", i + 1,
                describe(i), gates[i].detail.c_str());
  }
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures;
}
