#pragma once

// Numerical certification of 0 < A <= m(xi) <= B < inf for a (window, alpha)
// pair: an adaptively refined grid on [0, xi_max] plus explicit bounds on
// |m(xi) - ||psi||^2| for xi >= xi_max built from the four-interval split.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "amod/symbol.hpp"
#include "amod/windows.hpp"

namespace amod {

struct TailBounds {
  double xi = 0.0;
  double I1 = 0.0;
  double I2 = 0.0;
  double I3 = 0.0;
  double I4_deviation = 0.0;
  // ingredients of the I4 term
  double cutoff_A = 0.0;
  double mass_outside = 0.0;
  double sup_reciprocal_h_dev = 0.0;

  double total() const { return I1 + I2 + I3 + I4_deviation; }
};

namespace detail {

// Upper bound for int_{|z| > A} |psi^(z)|^2 dz as ||psi||^2 minus a
// quadrature over [-A, A] (plus its error estimate).
inline double power_outside(const Window& w, double A) {
  double lo = -A, hi = A;
  if (w.freq_support) {
    lo = std::max(lo, w.freq_support->lo);
    hi = std::min(hi, w.freq_support->hi);
    if (!(hi > lo)) return w.l2_norm_sq;
  }
  std::vector<double> anchors{0.0};
  auto knots = quad::graded_partition(lo, hi, anchors, [&](double) { return w.freq_scale; }, 0.0);
  quad::Options qo;
  qo.abs_tol = 1e-14;
  auto r = quad::integrate([&](double z) { return w.power(z); }, knots, qo);
  return std::max(0.0, w.l2_norm_sq - r.value) + r.error;
}

}  // namespace detail

/// Explicit upper bounds for the I1, I2, I3 contributions to m(xi) and for
/// |int_{I4} - ||psi||^2|. Needs alpha > 0, xi > 2 / alpha and a window that
/// satisfies the decay hypothesis.
inline TailBounds tail_bounds(double xi, const Window& w, const AlphaParams& p) {
  const auto verdict = check_hypothesis(w, p);
  if (!verdict.pass) throw DomainError("tail_bounds: hypothesis fails: " + verdict.detail);
  const auto g = geometry(xi, p);
  const double a = p.alpha();
  // inf |h| on I1 and I3 sits at the inner endpoints (h is monotone there)
  const double inf_h1 = std::abs(h_one_sided(xi, g.intervals[0].hi, -1, p));
  const double inf_h3 = std::abs(h_one_sided(xi, g.intervals[2].lo, -1, p));

  TailBounds tb;
  tb.xi = xi;
  tb.I1 = tb.I2 = tb.I3 = std::numeric_limits<double>::infinity();
  for (const auto& env : w.envelopes) {
    if (!(env.r > verdict.threshold)) continue;
    const double C2 = env.C * env.C;
    const double k = 2.0 * env.r - 1.0;
    tb.I2 = std::min(tb.I2, a / (1.0 - a) * C2 * std::pow(xi, a) * std::pow(1.0 + g.r_at_star, -2.0 * env.r));
    tb.I1 = std::min(tb.I1, C2 / (k * inf_h1) * std::pow(1.0 + g.z1, -k));
    tb.I3 = std::min(tb.I3, C2 / (k * inf_h3) * (std::pow(1.0 + g.z2, -k) - std::pow(1.0 + xi, -k)));
  }

  // I4: split z at +-A; the cut A balances the two error terms.
  const double norm = w.l2_norm_sq;
  auto terms = [&](double A) {
    const double sup = right_branch_h_deviation(xi, A, p, 201, true);
    const double out = detail::power_outside(w, A);
    return std::array<double, 3>{sup * norm, out * (1.0 + 1.0 / (1.0 - a)), sup};
  };
  double lo = std::log(1e-3), hi = std::log(0.999 * xi);
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto t = terms(std::exp(mid));
    (t[0] < t[1] ? lo : hi) = mid;
  }
  double best = std::numeric_limits<double>::infinity();
  for (double logA : {lo, hi}) {
    const double A = std::exp(logA);
    const auto t = terms(A);
    if (t[0] + t[1] < best) {
      best = t[0] + t[1];
      tb.cutoff_A = A;
      tb.sup_reciprocal_h_dev = t[2];
      tb.mass_outside = t[1] / (1.0 + 1.0 / (1.0 - a));
    }
  }
  tb.I4_deviation = best;
  return tb;
}

enum class CertStatus { certified_numerically, hypothesis_failed, inconclusive };

inline const char* to_string(CertStatus s) {
  switch (s) {
    case CertStatus::certified_numerically: return "certified-numerically";
    case CertStatus::hypothesis_failed: return "hypothesis-failed";
    case CertStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

struct AdmissibilityCertificate {
  double alpha = 0.0;
  std::string window_id;
  HypothesisVerdict hypothesis;
  double A_est = 0.0;
  double B_est = 0.0;
  double xi_max = 0.0;
  std::string grid_spacing_policy;
  TailBounds tail_report;
  double limit_value = 0.0;
  CertStatus status = CertStatus::inconclusive;

  // not exported
  SymbolGrid grid;            // xi >= 0 side (m_psi); negative side in grid_negative
  SymbolGrid grid_negative;   // m_psi(-xi) for complex windows, stored at +xi
  double tail_band = 0.0;     // max total tail bound over sampled xi >= xi_max
  std::string reason;

  double conditioning() const { return A_est > 0.0 ? B_est / A_est : std::numeric_limits<double>::infinity(); }
};

struct CertifyOptions {
  std::size_t max_points = 20000;
  /// Samples per decade for the tail band beyond xi_max (up to 1000 xi_max).
  int tail_points_per_decade = 4;
};

namespace detail {

// Refines a sorted grid until neighbours that could hide the extreme values
// differ by less than tol. Returns false if the point budget ran out.
inline bool refine_grid(SymbolGrid& g, const Window& w, const AlphaParams& p, double tol, double qtol,
                        std::size_t max_points) {
  for (;;) {
    const double mn = *std::min_element(g.m_values.begin(), g.m_values.end());
    const double mx = *std::max_element(g.m_values.begin(), g.m_values.end());
    std::vector<double> mids;
    for (std::size_t i = 0; i + 1 < g.xi_values.size(); ++i) {
      const double d = std::abs(g.m_values[i + 1] - g.m_values[i]);
      if (d < tol) continue;
      const double lo = std::min(g.m_values[i], g.m_values[i + 1]) - d;
      const double hi = std::max(g.m_values[i], g.m_values[i + 1]) + d;
      if (lo <= mn + tol || hi >= mx - tol) mids.push_back(0.5 * (g.xi_values[i] + g.xi_values[i + 1]));
    }
    if (mids.empty()) return true;
    if (g.xi_values.size() + mids.size() > max_points) return false;
    auto fresh = sample_symbol(mids, w, p, qtol);
    std::vector<std::pair<double, std::pair<double, double>>> merged;
    for (std::size_t i = 0; i < g.xi_values.size(); ++i)
      merged.push_back({g.xi_values[i], {g.m_values[i], g.quad_err[i]}});
    for (std::size_t i = 0; i < fresh.xi_values.size(); ++i)
      merged.push_back({fresh.xi_values[i], {fresh.m_values[i], fresh.quad_err[i]}});
    std::sort(merged.begin(), merged.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    g.xi_values.clear();
    g.m_values.clear();
    g.quad_err.clear();
    for (const auto& [x, v] : merged) {
      g.xi_values.push_back(x);
      g.m_values.push_back(v.first);
      g.quad_err.push_back(v.second);
    }
  }
}

inline std::vector<double> initial_grid(double xi_max) {
  std::vector<double> xs{0.0};
  while (xs.back() < xi_max) {
    const double x = xs.back();
    const double next = x + std::max(0.125, 0.02 * x);
    xs.push_back(next >= xi_max * (1.0 - 1e-12) ? xi_max : next);
  }
  return xs;
}

}  // namespace detail

inline constexpr const char* kGridPolicy =
    "step max(0.125, 0.02 xi) on [0, xi_max], then midpoint refinement of every neighbour pair "
    "that differs by >= tol and could hide the grid minimum or maximum";

/// Certifies A <= m(xi) <= B numerically for xi in R. tol bounds the neighbour variation
/// of the refined grid; quadrature runs at tol / 10.
inline AdmissibilityCertificate certify(const Window& w, const AlphaParams& p, double xi_max, double tol,
                                        const CertifyOptions& opt = {}) {
  if (!(tol > 0.0)) throw DomainError("certify: tol must be positive");
  AdmissibilityCertificate c;
  c.alpha = p.alpha();
  c.window_id = w.id;
  c.xi_max = xi_max;
  c.limit_value = w.l2_norm_sq;
  c.hypothesis = check_hypothesis(w, p);
  c.grid_spacing_policy = kGridPolicy;
  if (!c.hypothesis.pass) {
    c.status = CertStatus::hypothesis_failed;
    c.reason = c.hypothesis.detail;
    return c;
  }
  if (p.alpha() == 0.0) {
    c.A_est = c.B_est = w.l2_norm_sq;
    c.grid_spacing_policy = "none: for alpha = 0 the symbol equals ||psi||^2 for every xi";
    c.status = CertStatus::certified_numerically;
    return c;
  }
  if (!(xi_max > 2.0 / p.alpha()))
    throw DomainError("certify: xi_max must exceed 2/alpha = " + format_real(2.0 / p.alpha()));

  const double qtol = 0.1 * tol;
  const bool both_sides = !w.real_valued;
  const Window conj = w.conjugate();

  c.grid = sample_symbol(detail::initial_grid(xi_max), w, p, qtol);
  bool ok = detail::refine_grid(c.grid, w, p, tol, qtol, opt.max_points);
  if (both_sides) {
    c.grid_negative = sample_symbol(detail::initial_grid(xi_max), conj, p, qtol);
    ok = ok && detail::refine_grid(c.grid_negative, conj, p, tol, qtol, opt.max_points);
  }
  if (!ok) {
    c.status = CertStatus::inconclusive;
    c.reason = "grid refinement exceeded the point budget";
    return c;
  }

  double grid_min = *std::min_element(c.grid.m_values.begin(), c.grid.m_values.end());
  double grid_max = *std::max_element(c.grid.m_values.begin(), c.grid.m_values.end());
  if (both_sides) {
    grid_min = std::min(grid_min, *std::min_element(c.grid_negative.m_values.begin(), c.grid_negative.m_values.end()));
    grid_max = std::max(grid_max, *std::max_element(c.grid_negative.m_values.begin(), c.grid_negative.m_values.end()));
  }

  c.tail_report = tail_bounds(xi_max, w, p);
  c.tail_band = c.tail_report.total();
  const int n_tail = 3 * opt.tail_points_per_decade;
  for (int j = 1; j <= n_tail; ++j) {
    const double xi = xi_max * std::pow(10.0, static_cast<double>(j) / opt.tail_points_per_decade);
    c.tail_band = std::max(c.tail_band, tail_bounds(xi, w, p).total());
    if (both_sides) c.tail_band = std::max(c.tail_band, tail_bounds(xi, conj, p).total());
  }
  if (both_sides) c.tail_band = std::max(c.tail_band, tail_bounds(xi_max, conj, p).total());

  if (!(grid_min > 0.0) || !(c.tail_band < 0.5 * grid_min)) {
    c.status = CertStatus::inconclusive;
    c.reason = "tail bound " + format_real(c.tail_band) + " does not close below half the grid minimum " +
               format_real(0.5 * grid_min) + "; raise xi_max";
    c.A_est = grid_min;
    c.B_est = grid_max;
    return c;
  }
  c.A_est = std::min(grid_min, c.limit_value - c.tail_band);
  c.B_est = std::max(grid_max, c.limit_value + c.tail_band);
  c.status = CertStatus::certified_numerically;
  return c;
}

// --- JSON export ---------------------------------------------------------

/// Writes the certificate as a JSON object; every number carries 17
/// significant digits.
inline void write_certificate_json(std::ostream& os, const AdmissibilityCertificate& c) {
  auto str = [](const std::string& s) { return nlohmann::json(s).dump(); };
  auto num = [](double v) { return std::isfinite(v) ? format_real(v) : std::string("null"); };
  os << "{\n";
  os << "  \"alpha\": " << num(c.alpha) << ",\n";
  os << "  \"window_id\": " << str(c.window_id) << ",\n";
  os << "  \"hypothesis\": {\"verdict\": " << str(c.hypothesis.pass ? "pass" : "fail")
     << ", \"threshold\": " << num(c.hypothesis.threshold) << ", \"decay_r\": " << num(c.hypothesis.decay_r)
     << ", \"freq_continuous\": " << (c.hypothesis.freq_continuous ? "true" : "false")
     << ", \"detail\": " << str(c.hypothesis.detail) << "},\n";
  os << "  \"A_est\": " << num(c.A_est) << ",\n";
  os << "  \"B_est\": " << num(c.B_est) << ",\n";
  os << "  \"xi_max\": " << num(c.xi_max) << ",\n";
  os << "  \"grid_spacing_policy\": " << str(c.grid_spacing_policy) << ",\n";
  os << "  \"tail_report\": {\"xi\": " << num(c.tail_report.xi) << ", \"I1\": " << num(c.tail_report.I1)
     << ", \"I2\": " << num(c.tail_report.I2) << ", \"I3\": " << num(c.tail_report.I3)
     << ", \"I4_deviation\": " << num(c.tail_report.I4_deviation) << "},\n";
  os << "  \"limit_value\": " << num(c.limit_value) << ",\n";
  os << "  \"status\": " << str(to_string(c.status)) << "\n";
  os << "}\n";
}

}  // namespace amod
