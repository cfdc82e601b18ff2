// Exact reduced dynamics: resolvent-propagated branches plus the occupied
// inflow, evaluated through running frequency accumulators.

#include "rwadyn/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "rwadyn/errors.hpp"
#include "rwadyn/linalg.hpp"
#include "rwadyn/quadrature.hpp"

namespace rwadyn::reduced {

namespace {

using Complex = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr Eigen::Index kPhaseRefresh = 4096;

// Running accumulators C_i(w, t) = int_0^t e^{-i (w_i - w) u} v_i(u) du on a
// fixed set of frequency nodes, advanced by one trapezoid panel per solver
// step.  The integrand factorizes as [e^{-i w_i u} v_i(u)] * [e^{i w u}], so
// the update is two rank-one products; node phases advance by multiplicative
// recurrence with a periodic exact refresh.
class InflowAccumulator {
public:
  static std::optional<InflowAccumulator> diagonal(
      const model::SystemHamiltonian& system,
      const kernels::NonvacuumDensity& occupied, double h, int base_panels,
      bool bisect) {
    if (occupied.is_zero()) return std::nullopt;
    const model::Interval win = occupied.window();
    if (!(win.hi > win.lo)) return std::nullopt;
    if (occupied.total_integral() <= 0.0) return std::nullopt;

    const double span = win.hi - win.lo;
    const Eigen::VectorXd& w = system.eigenvalues();
    std::vector<double> centers, widths;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      centers.push_back(w[i]);
      // The resolvent response at eigenfrequency w_i has the linewidth of
      // the coupling there; shells below that scale resolve it.
      const double gamma = kPi * occupied.density()(w[i]);
      widths.push_back(std::max(gamma, 1e-6 * span));
    }
    std::vector<double> edges =
        quad::graded_edges(win.lo, win.hi, centers, widths, base_panels);
    for (double k : occupied.kink_points())
      if (k > win.lo && k < win.hi) edges.push_back(k);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [span](double a, double b) {
                              return b - a < 1e-9 * span;
                            }),
                edges.end());
    if (bisect) {
      std::vector<double> fine;
      fine.reserve(2 * edges.size());
      for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        fine.push_back(edges[p]);
        fine.push_back(0.5 * (edges[p] + edges[p + 1]));
      }
      fine.push_back(edges.back());
      edges.swap(fine);
    }
    const quad::PanelRule rule = quad::gauss_legendre_panels(edges);
    const auto a = static_cast<Eigen::Index>(rule.nodes.size());
    if (a == 0) return std::nullopt;

    InflowAccumulator acc(system, h, a);
    acc.mode_ = Mode::Quadrature;
    for (Eigen::Index q = 0; q < a; ++q) {
      acc.nodes_[q] = rule.nodes[q];
      acc.weights_[q] = rule.weights[q] * occupied(rule.nodes[q]);
    }
    acc.finish_setup();
    return acc;
  }

  static std::optional<InflowAccumulator> grid(
      const model::SystemHamiltonian& system,
      const kernels::CorrelationKernel& correlation, double h) {
    const model::GeneralGridOccupation& state = correlation.grid_state();
    const Eigen::VectorXd& g = correlation.mode_couplings();
    if (state.rho.size() == 0 || state.rho.cwiseAbs().maxCoeff() == 0.0 ||
        g.cwiseAbs().maxCoeff() == 0.0)
      return std::nullopt;

    InflowAccumulator acc(system, h, state.modes());
    acc.mode_ = Mode::Grid;
    acc.nodes_ = state.grid;
    acc.weights_ = g * state.dk;  // couples as g_a dk per column
    acc.rho_ = state.rho;
    acc.finish_setup();
    return acc;
  }

  void advance(const Eigen::VectorXcd& v_next) {
    const double half = 0.5 * h_;
    c_.noalias() += half * (sprev_ * zvec_.transpose());
    ++n_;
    if (n_ % kPhaseRefresh == 0) {
      const double t = static_cast<double>(n_) * h_;
      for (Eigen::Index q = 0; q < zvec_.size(); ++q)
        zvec_[q] = std::exp(Complex(0.0, nodes_[q] * t));
      for (Eigen::Index i = 0; i < pvec_.size(); ++i)
        pvec_[i] = std::exp(Complex(0.0, -omega_[i] * t));
    } else {
      zvec_.array() *= zstep_.array();
      pvec_.array() *= pstep_.array();
    }
    sprev_ = pvec_.cwiseProduct(v_next);
    c_.noalias() += half * (sprev_ * zvec_.transpose());
  }

  // Schroedinger-picture excited-block inflow at the current time.
  Eigen::MatrixXcd value() const {
    if (mode_ == Mode::Quadrature) {
      // Each level couples to its own reservoir and the occupations carry
      // no cross-reservoir coherence, so the reservoir sum contracts the
      // two propagators through both indices: the eigenbasis inflow is
      // diagonal, sum_q w_q |C_i(w_q, t)|^2, with no cross terms.
      const Eigen::VectorXcd core =
          (c_.cwiseAbs2() * weights_).cast<Complex>();
      return basis_ * core.asDiagonal() * basis_.adjoint();
    }
    const Eigen::Index n = basis_.rows();
    const Eigen::Index m = nodes_.size();
    Eigen::MatrixXcd phi(n, n * m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::MatrixXcd block = basis_ * c_.col(a).asDiagonal() *
                                     basis_.adjoint() *
                                     (weights_[a] * std::conj(zvec_[a]));
      for (Eigen::Index j = 0; j < n; ++j) phi.col(j * m + a) = block.col(j);
    }
    return phi * rho_ * phi.adjoint();
  }

private:
  enum class Mode { Quadrature, Grid };

  InflowAccumulator(const model::SystemHamiltonian& system, double h,
                    Eigen::Index a)
      : h_(h),
        omega_(system.eigenvalues()),
        basis_(system.basis()),
        nodes_(a),
        weights_(a),
        c_(Eigen::MatrixXcd::Zero(system.levels(), a)) {}

  void finish_setup() {
    const Eigen::Index a = nodes_.size();
    const Eigen::Index n = omega_.size();
    zvec_ = Eigen::VectorXcd::Ones(a);
    zstep_.resize(a);
    for (Eigen::Index q = 0; q < a; ++q)
      zstep_[q] = std::exp(Complex(0.0, nodes_[q] * h_));
    pvec_ = Eigen::VectorXcd::Ones(n);
    pstep_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      pstep_[i] = std::exp(Complex(0.0, -omega_[i] * h_));
    sprev_ = Eigen::VectorXcd::Ones(n);  // v(0) = 1 with unit phase
  }

  Mode mode_ = Mode::Quadrature;
  double h_ = 0.0;
  Eigen::Index n_ = 0;
  Eigen::VectorXd omega_;
  Eigen::MatrixXcd basis_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXcd rho_;
  Eigen::MatrixXcd c_;
  Eigen::VectorXcd zvec_, zstep_;   // e^{+i w_a t} per node
  Eigen::VectorXcd pvec_, pstep_;   // e^{-i w_i t} per eigenvalue
  Eigen::VectorXcd sprev_;
};

std::optional<InflowAccumulator> make_accumulator(
    const model::SystemHamiltonian& system,
    const kernels::CorrelationKernel& correlation, double h, int base_panels,
    bool bisect) {
  if (correlation.diagonal_identical()) {
    return InflowAccumulator::diagonal(system, correlation.occupied_density(),
                                       h, base_panels, bisect);
  }
  if (bisect) return std::nullopt;  // finite grid sums are already exact
  return InflowAccumulator::grid(system, correlation, h);
}

template <class SampleAt>
StateSeries run_core(const model::InitialState& state,
                     const model::SystemHamiltonian& system,
                     const kernels::CorrelationKernel& correlation,
                     const EvolveOptions& opt, double h, Eigen::Index n_steps,
                     SampleAt&& sample_at) {
  model::validate_initial_state(state, system.levels());
  if (correlation.levels() != system.levels())
    throw GridMismatch("correlation kernel level count " +
                       std::to_string(correlation.levels()) +
                       " does not match the system's " +
                       std::to_string(system.levels()));
  if (opt.output_stride < 1)
    throw ConfigError("solver.output_stride", "stride must be positive");
  if (n_steps % opt.output_stride != 0)
    throw ConfigError("solver.output_stride",
                      "stride must divide the step count " +
                          std::to_string(n_steps));

  const Eigen::Index n = system.levels();
  const Eigen::MatrixXcd& u = system.basis();
  const Eigen::VectorXd& omega = system.eigenvalues();
  const Eigen::MatrixXcd sigma_ee = state.sigma.block(1, 1, n, n);
  const Eigen::RowVectorXcd sigma_0e = state.sigma.block(0, 1, 1, n);
  const double bath_weight = 1.0 - state.p;

  std::optional<InflowAccumulator> acc, acc_fine;
  if (bath_weight > 0.0) {
    acc = make_accumulator(system, correlation, h, opt.base_panels, false);
    if (acc && opt.refine_check && correlation.diagonal_identical())
      acc_fine = make_accumulator(system, correlation, h, opt.base_panels,
                                  true);
  }

  StateSeries out;
  out.step = h;
  out.horizon = h * static_cast<double>(n_steps);
  out.output_stride = opt.output_stride;
  out.states.reserve(static_cast<std::size_t>(n_steps / opt.output_stride) + 1);
  out.min_eigenvalue = std::numeric_limits<double>::infinity();

  auto emit = [&](Eigen::Index idx, const Eigen::VectorXcd& v) {
    const double t = static_cast<double>(idx) * h;
    Eigen::MatrixXcd wmat;
    if (idx == 0) {
      wmat = Eigen::MatrixXcd::Identity(n, n);
    } else {
      Eigen::VectorXcd phase(n);
      for (Eigen::Index i = 0; i < n; ++i)
        phase[i] = std::exp(Complex(0.0, -omega[i] * t)) * v[i];
      wmat = u * phase.asDiagonal() * u.adjoint();
    }

    model::BlockDensityMatrix b;
    b.t = t;
    b.rho0e = state.p * (sigma_0e * wmat.adjoint());
    Eigen::MatrixXcd ee = state.p * (wmat * sigma_ee * wmat.adjoint());
    if (acc) {
      const Eigen::MatrixXcd inflow = acc->value();
      if (acc_fine) {
        const Eigen::MatrixXcd fine = acc_fine->value();
        const double denom = std::max(
            {linalg::max_abs(inflow), linalg::max_abs(fine), 1e-10});
        const double dev = linalg::max_abs(fine - inflow) / denom;
        out.refine_deviation = std::max(out.refine_deviation, dev);
        if (dev > opt.refine_tol)
          throw QuadratureFailure(
              "inflow frequency quadrature differs by a relative " +
              std::to_string(dev) + " between panel layouts at t = " +
              std::to_string(t));
      }
      ee.noalias() += bath_weight * inflow;
    }
    b.rhoee = std::move(ee);
    b.rho00 = 1.0 - b.rhoee.trace().real();
    out.max_trace_residual =
        std::max(out.max_trace_residual, b.trace_residual());
    out.min_eigenvalue = std::min(out.min_eigenvalue, b.min_eigenvalue());
    out.states.push_back(std::move(b));
  };

  emit(0, sample_at(Eigen::Index{0}));
  for (Eigen::Index m = 1; m <= n_steps; ++m) {
    const Eigen::VectorXcd v = sample_at(m);
    if (acc) acc->advance(v);
    if (acc_fine) acc_fine->advance(v);
    if (m % opt.output_stride == 0) emit(m, v);
  }
  return out;
}

void check_density_consistency(const kernels::MemoryKernel& kernel,
                               const kernels::CorrelationKernel& correlation) {
  if (!correlation.diagonal_identical()) return;
  const double a = kernel.coupling_mass();
  const double b =
      correlation.occupied_density().density().total_integral();
  if (std::abs(a - b) > 1e-8 * std::max({1.0, a, b}))
    throw ConfigError("correlation",
                      "memory kernel and correlation kernel are built from "
                      "differently scaled densities");
}

}  // namespace

StateSeries evolve_exact(const model::InitialState& state,
                         const model::SystemHamiltonian& system,
                         const kernels::MemoryKernel& kernel,
                         const kernels::CorrelationKernel& correlation,
                         const EvolveOptions& opt) {
  check_density_consistency(kernel, correlation);
  volterra::SolveOptions sopt;
  sopt.step = opt.step;
  sopt.horizon = opt.horizon;
  sopt.lag_cutoff = opt.lag_cutoff;
  volterra::ResolventStream stream(system, kernel, sopt);
  auto sampler = [&stream](Eigen::Index m) -> Eigen::VectorXcd {
    if (m > 0) stream.advance();
    return stream.current();
  };
  return run_core(state, system, correlation, opt, stream.step(),
                  stream.total_steps(), sampler);
}

StateSeries evolve_on_trajectory(const model::InitialState& state,
                                 const model::SystemHamiltonian& system,
                                 const volterra::ResolventTrajectory& resolvent,
                                 const kernels::CorrelationKernel& correlation,
                                 const EvolveOptions& opt) {
  auto sampler = [&resolvent](Eigen::Index m) -> Eigen::VectorXcd {
    return resolvent.amplitudes.col(m);
  };
  return run_core(state, system, correlation, opt, resolvent.step,
                  resolvent.n_samples() - 1, sampler);
}

Eigen::MatrixXcd excitation_inflow(const volterra::ResolventTrajectory& resolvent,
                                   const model::SystemHamiltonian& system,
                                   const kernels::CorrelationKernel& correlation,
                                   Eigen::Index idx, const EvolveOptions& opt) {
  if (idx < 0 || idx >= resolvent.n_samples())
    throw DomainError("inflow sample index out of range");
  auto acc = make_accumulator(system, correlation, resolvent.step,
                              opt.base_panels, false);
  const Eigen::Index n = system.levels();
  if (!acc) return Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index m = 1; m <= idx; ++m)
    acc->advance(resolvent.amplitudes.col(m));
  return acc->value();
}

Eigen::MatrixXcd excitation_inflow_direct(
    const volterra::ResolventTrajectory& resolvent,
    const model::SystemHamiltonian& system,
    const kernels::CorrelationKernel& correlation, Eigen::Index idx) {
  if (idx < 0 || idx >= resolvent.n_samples())
    throw DomainError("inflow sample index out of range");
  const Eigen::Index n = system.levels();
  if (idx == 0) return Eigen::MatrixXcd::Zero(n, n);
  const double h = resolvent.step;
  const Eigen::VectorXd& omega = system.eigenvalues();
  const Eigen::MatrixXcd& u = system.basis();

  // Schroedinger-picture per-eigenvalue amplitudes s_i(t_m).
  Eigen::MatrixXcd s(n, idx + 1);
  for (Eigen::Index m = 0; m <= idx; ++m) {
    const double t = static_cast<double>(m) * h;
    for (Eigen::Index i = 0; i < n; ++i)
      s(i, m) =
          std::exp(Complex(0.0, -omega[i] * t)) * resolvent.amplitudes(i, m);
  }
  Eigen::VectorXd wgt = Eigen::VectorXd::Ones(idx + 1);
  wgt[0] = wgt[idx] = 0.5;

  if (correlation.diagonal_identical()) {
    // K(s, s') = k(s - s') I: the independent-reservoir sum keeps only the
    // per-eigenvalue diagonal of the double sum.  Precompute k per lag and
    // contract each eigenchannel as a quadratic form.
    Eigen::VectorXcd lag(idx + 1);
    for (Eigen::Index d = 0; d <= idx; ++d)
      lag[d] = correlation.scalar(static_cast<double>(d) * h);
    Eigen::MatrixXcd kmat(idx + 1, idx + 1);  // kmat(p, q) = k(t_p - t_q)
    for (Eigen::Index p = 0; p <= idx; ++p)
      for (Eigen::Index q = 0; q <= idx; ++q)
        kmat(p, q) = p >= q ? lag[p - q] : std::conj(lag[q - p]);
    // Column m of sw holds s(idx - p) weighted for p = m.
    Eigen::MatrixXcd sw(n, idx + 1);
    for (Eigen::Index p = 0; p <= idx; ++p)
      sw.col(p) = wgt[p] * s.col(idx - p);
    Eigen::VectorXcd core(n);
    for (Eigen::Index i = 0; i < n; ++i)
      core[i] = (h * h) * (sw.row(i) * kmat * sw.row(i).adjoint())(0);
    return u * core.asDiagonal() * u.adjoint();
  }

  std::vector<Eigen::MatrixXcd> wm(idx + 1);
  for (Eigen::Index m = 0; m <= idx; ++m)
    wm[m] = u * s.col(m).asDiagonal() * u.adjoint();
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index p = 0; p <= idx; ++p) {
    const double tp = static_cast<double>(p) * h;
    for (Eigen::Index q = 0; q <= idx; ++q) {
      const double tq = static_cast<double>(q) * h;
      acc.noalias() += (wgt[p] * wgt[q]) * wm[idx - p] *
                       correlation(tp, tq) * wm[idx - q].adjoint();
    }
  }
  return (h * h) * acc;
}

}  // namespace rwadyn::reduced
