#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace vgfx {

/// Tolerances for adaptive quadrature. An integral is accepted once the
/// estimated absolute error is below max(abs_tol, rel_tol * |value|).
struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_subdivisions = 200;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int subdivisions = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule. Nodes are the
// nonnegative abscissae in decreasing order; the Gauss nodes are the odd
// indices.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

// Error estimate follows QUADPACK's QK15: the raw |K - G| difference is
// rescaled by the integrand's mean absolute deviation on the segment.
template <class F>
Segment gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<double, 15> values;
  values[7] = f(center);
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    values[j] = f(center - dx);
    values[14 - j] = f(center + dx);
  }
  double kronrod = values[7] * kKronrodWeights[7];
  double gauss = values[7] * kGaussWeights[3];
  double abs_sum = std::abs(kronrod);
  for (int j = 0; j < 7; ++j) {
    const double pair = values[j] + values[14 - j];
    kronrod += kKronrodWeights[j] * pair;
    abs_sum += kKronrodWeights[j] * (std::abs(values[j]) + std::abs(values[14 - j]));
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  const double mean = 0.5 * kronrod;
  double deviation = kKronrodWeights[7] * std::abs(values[7] - mean);
  for (int j = 0; j < 7; ++j)
    deviation += kKronrodWeights[j] * (std::abs(values[j] - mean) + std::abs(values[14 - j] - mean));

  const double width = std::abs(half);
  double error = std::abs((kronrod - gauss) * half);
  deviation *= width;
  abs_sum *= width;
  if (deviation != 0.0 && error != 0.0) error = deviation * std::min(1.0, std::pow(200.0 * error / deviation, 1.5));
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  if (abs_sum > std::numeric_limits<double>::min() / (50.0 * kEps)) error = std::max(50.0 * kEps * abs_sum, error);
  return {a, b, kronrod * half, error};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b]. Optional
/// interior breakpoints seed the initial partition. Throws QuadratureError
/// when the tolerance is not met within spec.max_subdivisions bisections.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureSpec& spec,
                           std::span<const double> breakpoints = {}) {
  spec.validate();
  if (!(a < b)) {
    if (a == b) return {};
    throw DomainError("integrate: lower limit must not exceed upper limit");
  }
  std::vector<double> edges{a};
  for (double p : breakpoints)
    if (p > a && p < b) edges.push_back(p);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());

  std::priority_queue<detail::Segment> heap;
  double total = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i] == edges[i + 1]) continue;
    auto seg = detail::gauss_kronrod_15(f, edges[i], edges[i + 1]);
    total += seg.value;
    error += seg.error;
    heap.push(seg);
  }

  int splits = 0;
  while (error > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (!std::isfinite(total)) throw QuadratureError("integrate: non-finite integrand");
    if (splits >= spec.max_subdivisions) {
      throw QuadratureError("integrate: tolerance not met after " +
                            std::to_string(spec.max_subdivisions) +
                            " subdivisions (estimated error " + std::to_string(error) + ")");
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
  }
  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return {total, error, splits};
}

/// Finite interval outside which a log-concave integrand exp(h(v)) carries
/// at most `tail_mass` on each side.
struct TailBracket {
  double lower;
  double upper;
};

/// For concave h with derivative dh, walks outward from `mode` in steps of
/// `width` (doubling) until the log-concave tail bound exp(h(v)) / |h'(v)|
/// drops below tail_mass, then tightens each end by bisection.
template <class H, class DH>
TailBracket concave_tail_bracket(H&& h, DH&& dh, double mode, double width,
                                 double tail_mass) {
  const double log_mass = std::log(tail_mass);
  auto tail_ok = [&](double v) {
    const double slope = std::abs(dh(v));
    if (slope == 0.0) return false;
    const double hv = h(v);
    return hv == -INFINITY || hv - std::log(slope) <= log_mass;
  };
  auto find_edge = [&](double direction) {
    double inner = mode;
    double step = width;
    double outer = mode + direction * step;
    int guard = 0;
    while (!tail_ok(outer)) {
      inner = outer;
      step *= 2.0;
      outer = mode + direction * step;
      if (++guard > 200) throw QuadratureError("concave_tail_bracket: tail does not decay");
    }
    for (int i = 0; i < 20; ++i) {
      const double mid = 0.5 * (inner + outer);
      if (tail_ok(mid))
        outer = mid;
      else
        inner = mid;
    }
    return outer;
  };
  return {find_edge(-1.0), find_edge(1.0)};
}

}  // namespace vgfx
