// Closed-form kernel evaluations for the shipped density families.

#include "rwadyn/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "rwadyn/quadrature.hpp"

namespace rwadyn::kernels {

namespace {

constexpr Complex kI{0.0, 1.0};

double sinc(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

// (x cos x - sin x) / x^2, odd, with a stable small-argument series.
double cms(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return x * (-1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0);
  }
  return (x * std::cos(x) - std::sin(x)) / (x * x);
}

// Fourier transform of one linear segment: int_{wl}^{wr} (linear J) e^{-iwt} dw.
Complex segment_fourier(double wl, double wr, double jl, double jr, double t) {
  const double wc = 0.5 * (wl + wr);
  const double h = 0.5 * (wr - wl);
  const double ac = 0.5 * (jl + jr);
  const double b = (jr - jl) / (wr - wl);
  const double x = h * t;
  const Complex phase = std::exp(-kI * (wc * t));
  return phase * (2.0 * h * ac * sinc(x) +
                  kI * (2.0 * h * h * b) * cms(x));
}

// int_{wl}^{wr} (a + b w) / (p + i w) dw with the principal-branch log;
// valid for Re p >= 0 away from the points p = -i wl, -i wr.
Complex segment_laplace(double wl, double wr, double jl, double jr,
                        Complex p) {
  const double b = (jr - jl) / (wr - wl);
  const double a = jl - b * wl;
  const Complex ql = p + kI * wl;
  const Complex qr = p + kI * wr;
  const Complex dlog = std::log(qr) - std::log(ql);
  return -kI * b * (wr - wl) - kI * (a + kI * b * p) * dlog;
}

Complex segment_laplace_derivative(double wl, double wr, double jl, double jr,
                                   Complex p) {
  const double b = (jr - jl) / (wr - wl);
  const double a = jl - b * wl;
  const Complex ql = p + kI * wl;
  const Complex qr = p + kI * wr;
  const Complex dlog = std::log(qr) - std::log(ql);
  return b * dlog - kI * (a + kI * b * p) * (1.0 / qr - 1.0 / ql);
}

struct SegmentTable {
  std::vector<double> nodes;
  std::vector<double> values;
};

SegmentTable segments_of(const model::SpectralDensity& d) {
  SegmentTable t;
  if (const auto* w = std::get_if<model::FlatWindow>(&d.family())) {
    t.nodes = {w->omega_lo, w->omega_hi};
    t.values = {w->height, w->height};
  } else if (const auto* tab = std::get_if<model::Tabulated>(&d.family())) {
    t.nodes.assign(tab->grid.data(), tab->grid.data() + tab->grid.size());
    t.values.assign(tab->values.data(),
                    tab->values.data() + tab->values.size());
  }
  return t;
}

// Diverging or merely kinked evaluation points on the imaginary axis:
// a hard support edge (nonzero boundary value) makes the transform
// log-divergent; an interior kink only breaks the closed form, which a
// small real shift repairs.
Complex guard_laplace_point(const SegmentTable& seg, Complex p) {
  if (p.real() < -1e-12 * std::max(1.0, std::abs(p))) {
    throw DivergentLaplace(
        "kernel transform requested in the open left half plane (Re p = " +
        std::to_string(p.real()) + ")");
  }
  double peak = 0.0;
  for (double v : seg.values) peak = std::max(peak, v);
  for (std::size_t i = 0; i < seg.nodes.size(); ++i) {
    const Complex q = p + kI * seg.nodes[i];
    if (std::abs(q) <= 1e-12 * std::max(1.0, std::abs(p))) {
      const bool edge = (i == 0 || i + 1 == seg.nodes.size());
      if (edge && seg.values[i] > 1e-14 * std::max(1.0, peak)) {
        throw DivergentLaplace(
            "kernel transform diverges logarithmically at the hard support "
            "edge w = " + std::to_string(seg.nodes[i]));
      }
      return p + 1e-9;
    }
  }
  return p;
}

}  // namespace

// --- MemoryKernel ----------------------------------------------------------

MemoryKernel MemoryKernel::from_density(model::SpectralDensity density) {
  return MemoryKernel(std::move(density), 1.0);
}

MemoryKernel MemoryKernel::zero() {
  return MemoryKernel(model::SpectralDensity::lorentzian(0.0, 0.0, 1.0), 0.0);
}

Complex MemoryKernel::operator()(double t) const {
  if (prefactor_ == 0.0) return {0.0, 0.0};
  Complex g;
  if (const auto* l = std::get_if<model::Lorentzian>(&density_.family())) {
    g = l->kappa * l->gamma *
        std::exp(-kI * (l->omega0 * t) - l->gamma * std::abs(t));
  } else {
    SegmentTable seg = segments_of(density_);
    g = {0.0, 0.0};
    for (std::size_t i = 0; i + 1 < seg.nodes.size(); ++i) {
      g += segment_fourier(seg.nodes[i], seg.nodes[i + 1], seg.values[i],
                           seg.values[i + 1], t);
    }
  }
  return prefactor_ * g;
}

Complex MemoryKernel::laplace(Complex p) const {
  if (prefactor_ == 0.0) {
    if (p.real() < -1e-12 * std::max(1.0, std::abs(p))) {
      throw DivergentLaplace("kernel transform requested in the open left "
                             "half plane");
    }
    return {0.0, 0.0};
  }
  if (const auto* l = std::get_if<model::Lorentzian>(&density_.family())) {
    if (p.real() < -1e-12 * std::max(1.0, std::abs(p))) {
      throw DivergentLaplace("kernel transform requested in the open left "
                             "half plane");
    }
    return prefactor_ * l->kappa * l->gamma /
           (p + l->gamma + kI * l->omega0);
  }
  SegmentTable seg = segments_of(density_);
  const Complex q = guard_laplace_point(seg, p);
  Complex sum{0.0, 0.0};
  for (std::size_t i = 0; i + 1 < seg.nodes.size(); ++i) {
    sum += segment_laplace(seg.nodes[i], seg.nodes[i + 1], seg.values[i],
                           seg.values[i + 1], q);
  }
  return prefactor_ * sum;
}

Complex MemoryKernel::laplace_derivative(Complex p) const {
  if (prefactor_ == 0.0) return {0.0, 0.0};
  if (const auto* l = std::get_if<model::Lorentzian>(&density_.family())) {
    if (p.real() < -1e-12 * std::max(1.0, std::abs(p))) {
      throw DivergentLaplace("kernel transform requested in the open left "
                             "half plane");
    }
    const Complex d = p + l->gamma + kI * l->omega0;
    return -prefactor_ * l->kappa * l->gamma / (d * d);
  }
  SegmentTable seg = segments_of(density_);
  const Complex q = guard_laplace_point(seg, p);
  Complex sum{0.0, 0.0};
  for (std::size_t i = 0; i + 1 < seg.nodes.size(); ++i) {
    sum += segment_laplace_derivative(seg.nodes[i], seg.nodes[i + 1],
                                      seg.values[i], seg.values[i + 1], q);
  }
  return prefactor_ * sum;
}

double MemoryKernel::coupling_mass() const {
  return prefactor_ * density_.total_integral();
}

bool MemoryKernel::vanishing() const {
  return prefactor_ == 0.0 || density_.total_integral() == 0.0;
}

MemoryKernel MemoryKernel::scaled(double factor) const {
  if (factor < 0.0) {
    throw ConfigError("kernel.scale", "scale factor must be nonnegative");
  }
  return MemoryKernel(density_, prefactor_ * factor);
}

// --- NonvacuumDensity ------------------------------------------------------

NonvacuumDensity::NonvacuumDensity(model::SpectralDensity density,
                                   model::OccupationProfile occupation)
    : density_(std::move(density)), occupation_(std::move(occupation)) {
  const model::Interval a = density_.support();
  const model::Interval b = occupation_.support();
  window_ = model::Interval{std::max(a.lo, b.lo), std::min(a.hi, b.hi),
                            a.bounded || b.bounded};
  kinks_ = density_.kink_points();
  const std::vector<double> ok = occupation_.kink_points();
  kinks_.insert(kinks_.end(), ok.begin(), ok.end());
  std::sort(kinks_.begin(), kinks_.end());
}

double NonvacuumDensity::operator()(double w) const {
  return density_(w) * occupation_(w);
}

double NonvacuumDensity::derivative(double w) const {
  return density_.derivative(w) * occupation_(w) +
         density_(w) * occupation_.derivative(w);
}

double NonvacuumDensity::total_integral() const {
  if (is_zero() || !(window_.hi > window_.lo)) return 0.0;
  auto r = quad::integrate(
      [this](double w) { return Complex{(*this)(w), 0.0}; }, window_.lo,
      window_.hi, 1e-13, 1e-11, 4000);
  return r.value.real();
}

bool NonvacuumDensity::smooth() const {
  return density_.smooth() && occupation_.smooth();
}

bool NonvacuumDensity::is_zero() const {
  return occupation_.is_zero() || !(window_.hi > window_.lo);
}

bool NonvacuumDensity::near_kink(double w, double tol) const {
  for (double k : kinks_) {
    if (std::abs(w - k) <= tol) return true;
  }
  return false;
}

// --- CorrelationKernel -----------------------------------------------------

CorrelationKernel CorrelationKernel::diagonal(NonvacuumDensity occupied,
                                              Eigen::Index levels) {
  if (levels < 1) {
    throw ConfigError("system.levels", "needs at least one excited level");
  }
  CorrelationKernel k;
  k.levels_ = levels;
  k.occupied_ = std::make_shared<NonvacuumDensity>(std::move(occupied));
  return k;
}

CorrelationKernel CorrelationKernel::general(
    const model::SpectralDensity& density, model::GeneralGridOccupation state) {
  model::validate_occupation(state);
  CorrelationKernel k;
  k.levels_ = state.n_reservoirs;
  const Eigen::Index m = state.modes();
  k.couplings_.resize(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const double j = density(state.grid(a));
    if (j < 0.0) {
      throw NegativeSpectralDensity("density negative at grid frequency " +
                                    std::to_string(state.grid(a)));
    }
    k.couplings_(a) = std::sqrt(j);
  }
  k.general_ =
      std::make_shared<model::GeneralGridOccupation>(std::move(state));
  return k;
}

Complex CorrelationKernel::scalar(double tau) const {
  const NonvacuumDensity& d = occupied_density();
  if (d.is_zero()) return {0.0, 0.0};
  const model::Interval w = d.window();
  if (tau == 0.0) return {d.total_integral(), 0.0};
  auto r = quad::integrate(
      [&d, tau](double x) { return d(x) * std::exp(-kI * (x * tau)); }, w.lo,
      w.hi, 1e-13, 1e-11, 20000);
  return r.value;
}

const NonvacuumDensity& CorrelationKernel::occupied_density() const {
  if (!occupied_) {
    throw DomainError("correlation kernel is not of the diagonal kind");
  }
  return *occupied_;
}

const model::GeneralGridOccupation& CorrelationKernel::grid_state() const {
  if (!general_) {
    throw DomainError("correlation kernel is not a grid state");
  }
  return *general_;
}

const Eigen::VectorXd& CorrelationKernel::mode_couplings() const {
  if (!general_) {
    throw DomainError("correlation kernel is not a grid state");
  }
  return couplings_;
}

Eigen::MatrixXcd CorrelationKernel::operator()(double s, double sp) const {
  if (general_ == nullptr) {
    return scalar(s - sp) * Eigen::MatrixXcd::Identity(levels_, levels_);
  }
  const auto& st = *general_;
  const Eigen::Index m = st.modes();
  Eigen::VectorXcd left(m), right(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    left(a) = couplings_(a) * st.dk * std::exp(-kI * (st.grid(a) * s));
    right(a) = couplings_(a) * st.dk * std::exp(-kI * (st.grid(a) * sp));
  }
  Eigen::MatrixXcd k(levels_, levels_);
  for (Eigen::Index j = 0; j < levels_; ++j) {
    for (Eigen::Index jp = 0; jp < levels_; ++jp) {
      k(j, jp) = left.transpose() *
                 (st.rho.block(j * m, jp * m, m, m) * right.conjugate());
    }
  }
  return k;
}

// --- regulated transform ---------------------------------------------------

Complex laplace_regulated(const MemoryKernel& kernel, Complex p) {
  if (kernel.vanishing()) return {0.0, 0.0};
  if (p.real() < -1e-12 * std::max(1.0, std::abs(p))) {
    throw DivergentLaplace("regulated transform requested in the open left "
                           "half plane");
  }
  const model::Interval w = kernel.density().support();
  const auto& density = kernel.density();
  auto shifted = [&](double eps) {
    auto r = quad::integrate(
        [&, eps](double x) {
          return density(x) / (p + eps + kI * x);
        },
        w.lo, w.hi, 1e-12, 1e-10, 6000);
    return kernel.prefactor() * r.value;
  };
  const Complex i0 = shifted(1e-2);
  const Complex i1 = shifted(5e-3);
  const Complex i2 = shifted(2.5e-3);
  const Complex a = 2.0 * i1 - i0;
  const Complex b = 2.0 * i2 - i1;
  return (4.0 * b - a) / 3.0;
}

}  // namespace rwadyn::kernels
