#pragma once
// Scalar quadrature helpers: adaptive Gauss-Kronrod 7-15 for one-off
// integrals and fixed 12-point Gauss-Legendre panel rules for integrals that
// are evaluated many times on the same frequency grid.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <vector>

#include "rwadyn/errors.hpp"

namespace rwadyn::quad {

struct QuadResult {
  std::complex<double> value{0.0, 0.0};
  double error = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

// Kronrod-15 abscissae on [0,1) side of the symmetric rule; the Gauss-7
// subset sits at the odd indices (1,3,5) plus the centre node.
inline constexpr double kx[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double kw[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double gw[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct Segment {
  double a, b;
  std::complex<double> value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  std::complex<double> kron = kw[7] * f(c);
  std::complex<double> gauss = gw[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    const std::complex<double> pair = f(c - h * kx[i]) + f(c + h * kx[i]);
    kron += kw[i] * pair;
    if (i % 2 == 1) gauss += gw[i / 2] * pair;
  }
  kron *= h;
  gauss *= h;
  return Segment{a, b, kron, std::abs(kron - gauss)};
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of a complex-valued integrand over
// [a, b].  Splits the segment with the largest local error estimate until
// the summed estimate meets max(abs_tol, rel_tol * |integral|) or the
// segment budget is exhausted (QuadratureFailure).
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol = 1e-12,
                     double rel_tol = 1e-10, std::size_t max_segments = 2000) {
  QuadResult out;
  if (a == b) return out;
  std::priority_queue<detail::Segment> heap;
  detail::Segment first = detail::gk15(f, a, b);
  out.evaluations = 15;
  std::complex<double> total = first.value;
  double err = first.error;
  heap.push(first);
  while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (heap.size() >= max_segments) {
      throw QuadratureFailure("adaptive quadrature exhausted its budget of " +
                              std::to_string(max_segments) +
                              " segments (error " + std::to_string(err) + ")");
    }
    detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      throw QuadratureFailure(
          "adaptive quadrature hit spacing limit without converging");
    }
    detail::Segment left = detail::gk15(f, worst.a, mid);
    detail::Segment right = detail::gk15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  out.value = total;
  out.error = err;
  return out;
}

// Fixed panel rule: nodes and weights of a composite 12-point
// Gauss-Legendre rule over the given sorted panel edges.
struct PanelRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline constexpr double glx12[6] = {
    0.125233408511469, 0.367831498998180, 0.587317954286617,
    0.769902674194305, 0.904117256370475, 0.981560634246719};
inline constexpr double glw12[6] = {
    0.249147045813403, 0.233492536538355, 0.203167426723066,
    0.160078328543346, 0.106939325995318, 0.047175336386512};

}  // namespace detail

inline PanelRule gauss_legendre_panels(const std::vector<double>& edges) {
  PanelRule rule;
  if (edges.size() < 2) return rule;
  rule.nodes.reserve(12 * (edges.size() - 1));
  rule.weights.reserve(12 * (edges.size() - 1));
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double c = 0.5 * (edges[p] + edges[p + 1]);
    const double h = 0.5 * (edges[p + 1] - edges[p]);
    for (int i = 5; i >= 0; --i) {
      rule.nodes.push_back(c - h * detail::glx12[i]);
      rule.weights.push_back(h * detail::glw12[i]);
    }
    for (int i = 0; i < 6; ++i) {
      rule.nodes.push_back(c + h * detail::glx12[i]);
      rule.weights.push_back(h * detail::glw12[i]);
    }
  }
  return rule;
}

// Panel edges over [lo, hi]: a uniform base subdivision refined near each
// centre by geometrically graded shells of scale width_i * 2^k, so locally
// narrow features (resolvent peaks) are resolved without a global fine grid.
inline std::vector<double> graded_edges(double lo, double hi,
                                        const std::vector<double>& centers,
                                        const std::vector<double>& widths,
                                        int base_panels = 24) {
  std::vector<double> edges;
  if (!(hi > lo)) return edges;
  edges.reserve(static_cast<std::size_t>(base_panels) + 1);
  for (int i = 0; i <= base_panels; ++i) {
    edges.push_back(lo + (hi - lo) * static_cast<double>(i) / base_panels);
  }
  const double span = hi - lo;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double w0 =
        std::min(span, std::max(widths.size() > c ? widths[c] : span / 100.0,
                                span * 1e-6));
    for (int k = 0; k < 12; ++k) {
      const double r = w0 * static_cast<double>(1 << k);
      if (r > span) break;
      for (double e : {centers[c] - r, centers[c] + r}) {
        if (e > lo && e < hi) edges.push_back(e);
      }
    }
    if (centers[c] > lo && centers[c] < hi) edges.push_back(centers[c]);
  }
  std::sort(edges.begin(), edges.end());
  // Merge edges closer than a relative spacing floor to avoid degenerate
  // panels; endpoints always survive.
  std::vector<double> merged;
  merged.push_back(edges.front());
  const double min_sep = span * 1e-9;
  for (std::size_t i = 1; i + 1 < edges.size(); ++i) {
    if (edges[i] - merged.back() > min_sep && hi - edges[i] > min_sep) {
      merged.push_back(edges[i]);
    }
  }
  merged.push_back(edges.back());
  return merged;
}

}  // namespace rwadyn::quad
