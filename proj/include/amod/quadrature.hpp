#pragma once

// Globally adaptive Gauss-Kronrod (G7/K15) integration on a finite partition.
//
// The caller supplies the initial partition (breakpoints where the integrand
// has kinks, plus any pre-splitting it wants). The driver repeatedly bisects
// the piece with the largest |K15 - G7| until the summed error estimate meets
// the absolute tolerance.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cstddef>
#include <functional>
#include <queue>
#include <span>
#include <vector>

#include "amod/common.hpp"

namespace amod::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t pieces = 0;
  std::size_t evaluations = 0;
};

struct Options {
  double abs_tol = 1e-10;
  std::size_t max_pieces = 200000;
  /// Called with every (node, integrand value) pair that enters the sum.
  std::function<void(double, double)> observer;
};

namespace detail {

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

template <class F>
Piece gk15(const F& f, double a, double b, const Options& opt) {
  using kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& x = kronrod::abscissa();
  const auto& wk = kronrod::weights();
  const auto& wg = gauss::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fc = f(c);
  if (opt.observer) opt.observer(c, fc);
  double k = fc * wk[0];
  double g = fc * wg[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double u = h * x[i];
    const double f1 = f(c - u);
    const double f2 = f(c + u);
    if (opt.observer) {
      opt.observer(c - u, f1);
      opt.observer(c + u, f2);
    }
    k += wk[i] * (f1 + f2);
    if (i % 2 == 0) g += wg[i / 2] * (f1 + f2);
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace detail

/// Integrates f over [knots.front(), knots.back()] starting from the pieces
/// between consecutive knots. Knots must be sorted; zero-width pieces are
/// skipped. Throws ToleranceError when max_pieces is reached.
template <class F>
Result integrate(const F& f, std::span<const double> knots, const Options& opt = {}) {
  Result res;
  std::priority_queue<detail::Piece> heap;
  double total = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (!(knots[i + 1] > knots[i])) continue;
    auto p = detail::gk15(f, knots[i], knots[i + 1], opt);
    total += p.value;
    err += p.error;
    heap.push(p);
  }
  res.evaluations = 15 * heap.size();
  while (err > opt.abs_tol && !heap.empty()) {
    if (heap.size() >= opt.max_pieces) {
      throw ToleranceError("adaptive quadrature: subdivision limit reached with error estimate " +
                           format_real(err) + " > " + format_real(opt.abs_tol));
    }
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Piece can no longer be split in double precision; the remaining
      // error is rounding noise at this scale.
      throw ToleranceError("adaptive quadrature: piece collapsed at " + format_real(mid));
    }
    heap.pop();
    auto left = detail::gk15(f, worst.a, mid, opt);
    auto right = detail::gk15(f, mid, worst.b, opt);
    res.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    // Running sums drift; resynchronise occasionally.
    if (heap.size() % 4096 == 0) {
      auto copy = heap;
      total = 0.0;
      err = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        err += copy.top().error;
        copy.pop();
      }
    }
  }
  // Final exact resummation so the result does not depend on update order.
  total = 0.0;
  err = 0.0;
  res.pieces = heap.size();
  std::vector<detail::Piece> pieces;
  pieces.reserve(heap.size());
  while (!heap.empty()) {
    pieces.push_back(heap.top());
    heap.pop();
  }
  std::sort(pieces.begin(), pieces.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
  for (const auto& p : pieces) {
    total += p.value;
    err += p.error;
  }
  res.value = total;
  res.error = err;
  return res;
}

/// Builds a partition of [lo, hi] that is fine near the anchor points and
/// grows geometrically away from them: the local step is
/// max(min_step(w), growth * distance(w, nearest anchor)). Anchors inside
/// (lo, hi) always become knots. With no anchors, lo acts as the anchor.
template <class StepFn>
std::vector<double> graded_partition(double lo, double hi, std::span<const double> anchors,
                                     const StepFn& min_step, double growth = 0.5) {
  std::vector<double> pts;
  for (double a : anchors)
    if (a >= lo && a <= hi) pts.push_back(a);
  if (pts.empty()) pts.push_back(lo);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  std::vector<double> knots{lo};
  double w = lo;
  auto next_anchor = pts.begin();
  while (w < hi) {
    while (next_anchor != pts.end() && *next_anchor <= w) ++next_anchor;
    const double target = next_anchor == pts.end() ? hi : *next_anchor;
    double d = std::abs(target - w);
    if (next_anchor != pts.begin()) d = std::min(d, w - *(next_anchor - 1));
    if (next_anchor == pts.end()) d = w - pts.back();
    const double step = std::max(min_step(w), growth * d);
    w = (w + 1.25 * step >= target) ? target : w + step;
    knots.push_back(w);
  }
  return knots;
}

}  // namespace amod::quad
