#pragma once

// The symbol m(xi) = int |psi^(r_xi(w))|^2 beta(w) dw of the frame multiplier
// and the scalar machinery around r_xi(w) = beta(w) (xi - w):
// derivative, critical point, branch inverses, the four-interval split used
// for large xi, and the change of variables z = r_xi(w).

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "amod/common.hpp"
#include "amod/quadrature.hpp"
#include "amod/windows.hpp"

namespace amod {

inline double eval_r(double xi, double omega, const AlphaParams& p) {
  return (xi - omega) * p.beta(omega);
}

/// 1 + side * alpha (xi - w) / (1 + |w|), with side = sgn(w) taken from the
/// caller so the one-sided limits at w = 0 are available.
inline double h_one_sided(double xi, double omega, int side, const AlphaParams& p) {
  return 1.0 + side * p.alpha() * (xi - omega) / (1.0 + std::abs(omega));
}

inline double eval_h(double xi, double omega, const AlphaParams& p) {
  if (omega == 0.0) throw DomainError("h_xi is not defined at omega = 0");
  return h_one_sided(xi, omega, sgn(omega), p);
}

inline double eval_r_prime(double xi, double omega, const AlphaParams& p) {
  if (omega == 0.0) throw DomainError("r_xi is not differentiable at omega = 0");
  return -p.beta(omega) * eval_h(xi, omega, p);
}

// ---------------------------------------------------------------------------
// Geometry for xi > 2 / alpha

struct XiGeometry {
  double xi = 0.0;
  double alpha = 0.0;
  double omega_star = 0.0;  // local minimum of r_xi, negative
  double half_width = 0.0;  // alpha xi^alpha / (2 (1 - alpha))
  std::array<Interval, 4> intervals{};
  double r_at_star = 0.0;
  double z1 = 0.0;  // r_xi at the right end of I1
  double z2 = 0.0;  // r_xi at the left end of I3
  // closed forms for inf |h_xi| on I1 and I3
  double inf_h_I1 = 0.0;
  double inf_h_I3 = 0.0;
};

inline XiGeometry geometry(double xi, const AlphaParams& p) {
  const double a = p.alpha();
  if (a == 0.0) throw DomainError("geometry: needs alpha > 0");
  if (!(xi > 2.0 / a)) throw DomainError("geometry: needs xi > 2/alpha = " + format_real(2.0 / a));
  XiGeometry g;
  g.xi = xi;
  g.alpha = a;
  g.omega_star = (1.0 - a * xi) / (1.0 - a);
  g.half_width = a * std::pow(xi, a) / (2.0 * (1.0 - a));
  const double inf = std::numeric_limits<double>::infinity();
  const double w1 = g.omega_star - g.half_width;
  const double w2 = g.omega_star + g.half_width;
  g.intervals = {Interval{-inf, w1}, Interval{w1, w2}, Interval{w2, 0.0}, Interval{0.0, inf}};
  g.r_at_star = std::pow(a, -a) * std::pow((xi - 1.0) / (1.0 - a), 1.0 - a);
  const double xa = std::pow(xi, a);
  const double lead = 1.0 / (std::pow(1.0 - a, 1.0 - a) * std::pow(a, a));
  g.z1 = lead * (xi - 1.0 + 0.5 * a * xa) / std::pow(xi - 1.0 + 0.5 * xa, a);
  g.z2 = lead * (xi - 1.0 - 0.5 * a * xa) / std::pow(xi - 1.0 - 0.5 * xa, a);
  g.inf_h_I1 = 0.5 * (1.0 - a) * xa / (xi - 1.0 + 0.5 * xa);
  g.inf_h_I3 = 0.5 * (1.0 - a) * xa / (xi - 1.0 - 0.5 * xa);
  return g;
}

// ---------------------------------------------------------------------------
// Branch inversion

enum class Branch { left, middle, right };

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::left: return "left";
    case Branch::middle: return "middle";
    case Branch::right: return "right";
  }
  return "?";
}

/// Solves r_xi(w) = z for w on one monotone branch: left = (-inf, w*],
/// middle = [w*, 0], right = [0, inf). Bisection on a bracket built from
/// the closed-form ranges, then one guarded Newton step.
inline double invert_r_branch(double xi, double z, Branch branch, const AlphaParams& p) {
  double lo = 0.0, hi = 0.0;
  bool decreasing = true;
  if (branch == Branch::right) {
    if (p.alpha() * xi <= -1.0) throw DomainError("invert_r_branch: right branch not monotone for this xi");
    if (z > xi) throw RangeError("invert_r_branch: z > xi is outside the right branch range (-inf, xi]");
    if (z == xi) return 0.0;
    lo = 0.0;
    hi = 1.0;
    while (eval_r(xi, hi, p) > z) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw RangeError("invert_r_branch: bracket overflow");
    }
  } else {
    const auto g = geometry(xi, p);
    if (z < g.r_at_star) throw RangeError("invert_r_branch: z below r(w*) = " + format_real(g.r_at_star));
    if (branch == Branch::middle) {
      if (z > xi) throw RangeError("invert_r_branch: z > xi is outside the middle branch range");
      if (z == xi) return 0.0;
      if (z == g.r_at_star) return g.omega_star;
      lo = g.omega_star;
      hi = 0.0;
      decreasing = false;
    } else {
      if (z == g.r_at_star) return g.omega_star;
      hi = g.omega_star;
      lo = g.omega_star - 1.0;
      double step = 1.0;
      while (eval_r(xi, lo, p) < z) {
        hi = lo;
        step *= 2.0;
        lo = g.omega_star - step;
        if (!std::isfinite(lo)) throw RangeError("invert_r_branch: bracket overflow");
      }
    }
  }
  // invariant: r(lo) and r(hi) bracket z
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double rm = eval_r(xi, mid, p);
    const bool go_right = decreasing ? (rm > z) : (rm < z);
    (go_right ? lo : hi) = mid;
  }
  double w = 0.5 * (lo + hi);
  double res = eval_r(xi, w, p) - z;
  if (w != 0.0) {
    const double d = eval_r_prime(xi, w, p);
    if (d != 0.0) {
      const double cand = w - res / d;
      if (cand >= lo && cand <= hi && cand != 0.0) {
        const double cres = eval_r(xi, cand, p) - z;
        if (std::abs(cres) < std::abs(res)) w = cand;
      }
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Quadrature of m(xi)

struct MValue {
  double value = 0.0;
  double error = 0.0;
};

struct SymbolOptions {
  std::size_t max_pieces = 400000;
  std::function<void(double, double)> observer;  // (omega, integrand) at every node
};

namespace detail {

// Smallest R >= kappa (1 + |xi|) with certified mass of the integrand outside
// [-R, R] at most `budget`. Returns {R, bound}.
inline std::pair<double, double> truncation_radius(double xi, const Window& w, const AlphaParams& p,
                                                   double budget) {
  const double a = p.alpha();
  if (w.freq_support) {
    // |r| >= (1/2)(1 + |w|)^{1-alpha} once |w| >= 2 (1 + |xi|); beyond that
    // point psi^(r) vanishes identically.
    const double M = std::max(std::abs(w.freq_support->lo), std::abs(w.freq_support->hi));
    const double R = std::max(2.0 * (1.0 + std::abs(xi)), std::pow(2.0 * M, 1.0 / (1.0 - a))) + 1.0;
    return {R, 0.0};
  }
  double best_R = std::numeric_limits<double>::infinity();
  double best_bound = 0.0;
  for (const auto& env : w.envelopes) {
    const double pexp = a + 2.0 * env.r * (1.0 - a);
    if (!(pexp > 1.0)) continue;
    const double kappa = std::max(2.0, 2.0 * env.r);
    const double fac = std::pow(1.0 - 1.0 / kappa, -2.0 * env.r);
    const double coef = 2.0 * env.C * env.C * fac / (pexp - 1.0);
    double R = std::pow(coef / budget, 1.0 / (pexp - 1.0)) - 1.0;
    R = std::max(R, kappa * (1.0 + std::abs(xi)));
    if (R < best_R) {
      best_R = R;
      best_bound = coef * std::pow(1.0 + R, 1.0 - pexp);
    }
  }
  if (!std::isfinite(best_R))
    throw ToleranceError("no window envelope gives an integrable tail for alpha = " + format_real(a));
  return {best_R, best_bound};
}

// Points where the integrand has kinks or its mass concentrates.
inline std::vector<double> omega_anchors(double xi, const AlphaParams& p) {
  const double a = p.alpha();
  std::vector<double> pts{0.0, xi};
  if (a * std::abs(xi) > 1.0) {
    const double ws = (1.0 - a * std::abs(xi)) / (1.0 - a);
    pts.push_back(xi > 0 ? ws : -ws);
  }
  if (a > 0.0 && xi > 2.0 / a) {
    const auto g = geometry(xi, p);
    pts.push_back(g.intervals[1].lo);
    pts.push_back(g.intervals[1].hi);
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

inline MValue integrate_omega(double xi, const Window& w, const AlphaParams& p, double lo, double hi,
                              double tol, const SymbolOptions& opt) {
  const auto anchors = omega_anchors(xi, p);
  const double scale = w.freq_scale;
  const double a = p.alpha();
  auto knots = quad::graded_partition(
      lo, hi, anchors, [&](double om) { return 2.0 * scale * std::pow(1.0 + std::abs(om), a); }, 0.5);
  quad::Options qo;
  qo.abs_tol = tol;
  qo.max_pieces = opt.max_pieces;
  qo.observer = opt.observer;
  auto f = [&](double om) {
    const double b = p.beta(om);
    return w.power((xi - om) * b) * b;
  };
  auto r = quad::integrate(f, knots, qo);
  return {r.value, r.error};
}

}  // namespace detail

/// m(xi) by adaptive quadrature over R, with the domain truncated where the
/// decay envelope certifies the neglected mass is below tol / 2.
inline MValue eval_m(double xi, const Window& w, const AlphaParams& p, double tol,
                     const SymbolOptions& opt = {}) {
  if (!(tol > 0.0)) throw DomainError("eval_m: tol must be positive");
  if (p.alpha() == 0.0) return {w.l2_norm_sq, 0.0};
  const auto [R, tail] = detail::truncation_radius(xi, w, p, 0.5 * tol);
  auto v = detail::integrate_omega(xi, w, p, -R, R, 0.5 * tol, opt);
  v.error += tail;
  return v;
}

struct MParts {
  std::array<double, 4> value{};
  std::array<double, 4> error{};
  double sum() const { return value[0] + value[1] + value[2] + value[3]; }
  double total_error() const { return error[0] + error[1] + error[2] + error[3]; }
};

/// Contributions of I1..I4 to m(xi); needs xi > 2 / alpha.
inline MParts eval_m_parts(double xi, const Window& w, const AlphaParams& p, double tol,
                           const SymbolOptions& opt = {}) {
  if (!(tol > 0.0)) throw DomainError("eval_m_parts: tol must be positive");
  const auto g = geometry(xi, p);
  const auto [R, tail] = detail::truncation_radius(xi, w, p, 0.25 * tol);
  MParts parts;
  const std::array<Interval, 4> clipped = {Interval{-R, g.intervals[0].hi}, g.intervals[1],
                                           g.intervals[2], Interval{0.0, R}};
  for (int k = 0; k < 4; ++k) {
    auto v = detail::integrate_omega(xi, w, p, clipped[k].lo, clipped[k].hi, 0.125 * tol, opt);
    parts.value[k] = v.value;
    parts.error[k] = v.error;
  }
  // the truncated tails belong to I1 (left) and I4 (right)
  parts.error[0] += 0.5 * tail;
  parts.error[3] += 0.5 * tail;
  return parts;
}

enum class Part { I1 = 0, I2 = 1, I3 = 2, I4 = 3 };

struct SubstitutedResult {
  double value = 0.0;
  double error = 0.0;
  double z_lo = 0.0;  // r_xi(I) as an interval (before truncation)
  double z_hi = 0.0;
};

/// The part of m(xi) over a monotone interval (I1, I3 or I4), computed in the
/// z = r_xi(w) domain: int_{r(I)} |psi^(z)|^2 / |h_xi(r^{-1}(z))| dz.
inline SubstitutedResult substituted_integral(double xi, Part part, const Window& w,
                                              const AlphaParams& p, double tol) {
  if (part == Part::I2) throw DomainError("substituted_integral: r_xi is not monotone on I2");
  if (!(tol > 0.0)) throw DomainError("substituted_integral: tol must be positive");
  const auto g = geometry(xi, p);
  const double a = p.alpha();
  const double inf = std::numeric_limits<double>::infinity();

  SubstitutedResult out;
  Branch branch = Branch::right;
  int side = 1;
  double inf_h = 1.0 - a;
  switch (part) {
    case Part::I1:
      out.z_lo = g.z1;
      out.z_hi = inf;
      branch = Branch::left;
      side = -1;
      inf_h = std::abs(h_one_sided(xi, g.intervals[0].hi, -1, p));
      break;
    case Part::I3:
      out.z_lo = g.z2;
      out.z_hi = xi;
      branch = Branch::middle;
      side = -1;
      inf_h = std::abs(h_one_sided(xi, g.intervals[2].lo, -1, p));
      break;
    default:
      out.z_lo = -inf;
      out.z_hi = xi;
      break;
  }

  // truncate an infinite z end where the envelope tail / inf|h| < tol / 2
  double lo = out.z_lo, hi = out.z_hi, tail = 0.0;
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    double Z = inf;
    if (w.freq_support) {
      Z = std::max(std::abs(w.freq_support->lo), std::abs(w.freq_support->hi));
    } else {
      for (const auto& env : w.envelopes) {
        if (!(env.r > 0.5)) continue;
        const double coef = env.C * env.C / ((2.0 * env.r - 1.0) * inf_h);
        const double cand = std::pow(coef / (0.5 * tol), 1.0 / (2.0 * env.r - 1.0)) - 1.0;
        if (cand < Z) {
          Z = cand;
          tail = coef * std::pow(1.0 + cand, 1.0 - 2.0 * env.r);
        }
      }
    }
    if (!std::isfinite(lo)) lo = std::min(-Z, hi - 1.0);
    if (!std::isfinite(hi)) hi = std::max(Z, lo + 1.0);
  }

  auto f = [&](double z) {
    const double om = invert_r_branch(xi, z, branch, p);
    return w.power(z) / std::abs(h_one_sided(xi, om, side, p));
  };
  std::vector<double> anchors{0.0, out.z_lo, out.z_hi};
  auto knots = quad::graded_partition(lo, hi, anchors, [&](double) { return w.freq_scale; }, 0.5);
  quad::Options qo;
  qo.abs_tol = 0.5 * tol;
  auto r = quad::integrate(f, knots, qo);
  out.value = r.value;
  out.error = r.error + tail;
  return out;
}

/// The same part computed directly in the omega domain (the reference for
/// substituted_integral).
inline MValue part_integral(double xi, Part part, const Window& w, const AlphaParams& p, double tol) {
  const auto g = geometry(xi, p);
  Interval I = g.intervals[static_cast<int>(part)];
  double tail = 0.0;
  if (!std::isfinite(I.lo) || !std::isfinite(I.hi)) {
    const auto [R, t] = detail::truncation_radius(xi, w, p, 0.5 * tol);
    tail = t;
    if (!std::isfinite(I.lo)) I.lo = -R;
    if (!std::isfinite(I.hi)) I.hi = R;
  }
  auto v = detail::integrate_omega(xi, w, p, I.lo, I.hi, 0.5 * tol, {});
  v.error += tail;
  return v;
}

/// sup over n points of z in [-A, A] of |h_xi(r^{-1}(z)) - 1| (right branch),
/// or of |1 / h_xi(r^{-1}(z)) - 1| when `reciprocal` is set. Needs xi > A.
inline double right_branch_h_deviation(double xi, double A, const AlphaParams& p, std::size_t n = 201,
                                       bool reciprocal = false) {
  if (!(xi > A)) throw DomainError("right_branch_h_deviation: needs xi > A");
  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = -A + 2.0 * A * static_cast<double>(i) / static_cast<double>(n - 1);
    const double om = invert_r_branch(xi, z, Branch::right, p);
    const double h = h_one_sided(xi, om, 1, p);
    sup = std::max(sup, std::abs((reciprocal ? 1.0 / h : h) - 1.0));
  }
  return sup;
}

// ---------------------------------------------------------------------------
// Sampled symbol

struct SymbolGrid {
  std::vector<double> xi_values;
  std::vector<double> m_values;
  std::vector<double> quad_err;
  std::optional<std::vector<std::array<double, 4>>> parts;
};

/// Evaluates m on the given xi values (sorted on output), in parallel. Parts
/// exist only for xi > 2 / alpha and are NaN elsewhere.
inline SymbolGrid sample_symbol(std::vector<double> xis, const Window& w, const AlphaParams& p, double tol,
                                bool with_parts = false) {
  std::sort(xis.begin(), xis.end());
  struct Cell {
    MValue m;
    std::array<double, 4> parts{};
  };
  auto cells = parallel_map(xis.size(), [&](std::size_t i) {
    Cell c;
    c.m = eval_m(xis[i], w, p, tol);
    if (with_parts) {
      if (p.alpha() > 0.0 && xis[i] > 2.0 / p.alpha())
        c.parts = eval_m_parts(xis[i], w, p, tol).value;
      else
        c.parts.fill(std::numeric_limits<double>::quiet_NaN());
    }
    return c;
  });
  SymbolGrid g;
  g.xi_values = std::move(xis);
  for (const auto& c : cells) {
    g.m_values.push_back(c.m.value);
    g.quad_err.push_back(c.m.error);
  }
  if (with_parts) {
    g.parts.emplace();
    for (const auto& c : cells) g.parts->push_back(c.parts);
  }
  return g;
}

inline void write_symbol_csv(std::ostream& os, const SymbolGrid& g) {
  os << (g.parts ? "xi,m,err,part1,part2,part3,part4\n" : "xi,m,err\n");
  for (std::size_t i = 0; i < g.xi_values.size(); ++i) {
    os << format_real(g.xi_values[i]) << ',' << format_real(g.m_values[i]) << ',' << format_real(g.quad_err[i]);
    if (g.parts)
      for (double v : (*g.parts)[i]) os << ',' << format_real(v);
    os << '\n';
  }
}

}  // namespace amod
