#pragma once

// Sampled voice transform V_psi f(x, w) = <f, T_x M_w D_{beta(w)} psi>, the
// frame operator as the Fourier multiplier m, its inverse, the second
// transform W_psi f = V_psi(A^{-1} f) and a discretised reproducing formula.
//
// Signals are periodised by the DFT. For each frequency row the coefficients
// are sqrt(beta) * IDFT(F_k conj(psi^(beta (xi_k - w)))), which is exact for
// the periodic band-limited model of f.

#include <cmath>
#include <algorithm>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "amod/admissibility.hpp"
#include "amod/fft.hpp"
#include "amod/group.hpp"
#include "amod/symbol.hpp"
#include "amod/windows.hpp"

namespace amod {

/// Where to evaluate the coefficients: every x_stride-th sample time of the
/// analysed signal, and an explicit list of frequencies with quadrature
/// weights (the local spacing).
struct CoefficientGridSpec {
  std::size_t x_stride = 1;
  std::vector<double> omega;
  std::vector<double> omega_weight;

  static CoefficientGridSpec uniform(double lo, double hi, double step, std::size_t x_stride = 1) {
    if (!(step > 0.0) || !(hi >= lo)) throw DomainError("uniform omega grid: need step > 0 and hi >= lo");
    CoefficientGridSpec s;
    s.x_stride = x_stride;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t j = 0; j < n; ++j) {
      s.omega.push_back(lo + static_cast<double>(j) * step);
      s.omega_weight.push_back(step);
    }
    return s;
  }

  /// Spacing proportional to 1 / beta(w) = (1 + |w|)^alpha, symmetric about 0.
  static CoefficientGridSpec progressive(double reach, double delta, double alpha, std::size_t x_stride = 1) {
    if (!(delta > 0.0) || !(reach > 0.0)) throw DomainError("progressive omega grid: need delta, reach > 0");
    std::vector<double> pos{0.0};
    while (pos.back() < reach) pos.push_back(pos.back() + delta * std::pow(1.0 + pos.back(), alpha));
    CoefficientGridSpec s;
    s.x_stride = x_stride;
    for (auto it = pos.rbegin(); it != pos.rend() - 1; ++it) s.omega.push_back(-*it);
    for (double v : pos) s.omega.push_back(v);
    // trapezoid-like weights: half the distance to each neighbour
    const std::size_t n = s.omega.size();
    for (std::size_t j = 0; j < n; ++j) {
      const double left = j > 0 ? s.omega[j] - s.omega[j - 1] : s.omega[1] - s.omega[0];
      const double right = j + 1 < n ? s.omega[j + 1] - s.omega[j] : s.omega[n - 1] - s.omega[n - 2];
      s.omega_weight.push_back(0.5 * (left + right));
    }
    return s;
  }
};

struct CoefficientGrid {
  std::vector<double> x_values;
  std::vector<double> omega_values;
  std::vector<double> omega_weights;
  double dx = 0.0;
  double alpha = 0.0;
  std::string window_id;
  std::size_t x_stride = 1;
  // geometry of the analysed signal
  double signal_t0 = 0.0;
  double signal_dt = 1.0;
  std::size_t signal_n = 0;
  /// values[j * x_values.size() + k] = V(x_k, omega_j)
  std::vector<cplx> values;

  std::size_t nx() const { return x_values.size(); }
  std::size_t nomega() const { return omega_values.size(); }
  cplx at(std::size_t k, std::size_t j) const { return values[j * nx() + k]; }

  /// sum |V|^2 dx domega
  double energy() const {
    double e = 0.0;
    for (std::size_t j = 0; j < nomega(); ++j) {
      double row = 0.0;
      for (std::size_t k = 0; k < nx(); ++k) row += std::norm(values[j * nx() + k]);
      e += row * omega_weights[j];
    }
    return e * dx;
  }
};

/// sum F conj(G) dx domega over matching grids.
inline cplx coefficient_inner(const CoefficientGrid& F, const CoefficientGrid& G) {
  if (F.values.size() != G.values.size()) throw DomainError("coefficient_inner: grids differ");
  cplx s = 0.0;
  for (std::size_t j = 0; j < F.nomega(); ++j) {
    cplx row = 0.0;
    for (std::size_t k = 0; k < F.nx(); ++k) row += F.values[j * F.nx() + k] * std::conj(G.values[j * F.nx() + k]);
    s += row * F.omega_weights[j];
  }
  return s * F.dx;
}

namespace detail {

// Fraction of the spectral energy allowed in the outer 5% of the band.
inline constexpr double kEdgeEnergy = 1e-6;

inline void check_band_resolved(const SampledSignal& f, const std::vector<cplx>& spec) {
  const auto xi = fft::frequencies(f.size(), f.dt);
  double total = 0.0, edge = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    total += std::norm(spec[k]);
    if (std::abs(xi[k]) > 0.95 * f.nyquist()) edge += std::norm(spec[k]);
  }
  if (total > 0.0 && edge > kEdgeEnergy * total)
    throw UnderresolutionError("signal is not band-resolved: " + format_real(edge / total) +
                               " of its energy sits in the outer 5% of the band");
}

}  // namespace detail

inline CoefficientGrid analyze(const SampledSignal& f, const Window& w, const AlphaParams& p,
                               const CoefficientGridSpec& spec) {
  if (spec.omega.size() != spec.omega_weight.size()) throw DomainError("analyze: omega weights mismatch");
  if (spec.x_stride == 0 || f.size() % spec.x_stride != 0)
    throw DomainError("analyze: x_stride must divide the signal length");
  const std::size_t n = f.size();
  const auto F = fft::forward(f.samples);
  detail::check_band_resolved(f, F);
  const auto xi = fft::frequencies(n, f.dt);

  CoefficientGrid g;
  g.alpha = p.alpha();
  g.window_id = w.id;
  g.x_stride = spec.x_stride;
  g.dx = f.dt * static_cast<double>(spec.x_stride);
  g.signal_t0 = f.t0;
  g.signal_dt = f.dt;
  g.signal_n = n;
  g.omega_values = spec.omega;
  g.omega_weights = spec.omega_weight;
  for (std::size_t k = 0; k < n; k += spec.x_stride) g.x_values.push_back(f.time(k));

  const std::size_t nx = g.x_values.size();
  auto rows = parallel_map(spec.omega.size(), [&](std::size_t j) {
    const double om = spec.omega[j];
    const double b = p.beta(om);
    const double sb = std::sqrt(b);
    std::vector<cplx> G(n);
    for (std::size_t k = 0; k < n; ++k) G[k] = F[k] * std::conj(w.eval_freq(b * (xi[k] - om))) * sb;
    auto full = fft::inverse(G);
    std::vector<cplx> row(nx);
    for (std::size_t k = 0; k < nx; ++k) row[k] = full[k * spec.x_stride];
    return row;
  });
  g.values.reserve(nx * spec.omega.size());
  for (auto& r : rows) g.values.insert(g.values.end(), r.begin(), r.end());
  return g;
}

/// Discretised synthesis sum_{x, w} c(x, w) pi(sigma(x, w)) psi dx dw onto
/// the grid of the analysed signal (the adjoint of analyze up to the
/// quadrature weights).
inline SampledSignal synthesize(const CoefficientGrid& c, const Window& w, const AlphaParams& p) {
  const std::size_t n = c.signal_n;
  const auto xi = fft::frequencies(n, c.signal_dt);
  const std::size_t nx = c.nx();
  auto contrib = parallel_map(c.nomega(), [&](std::size_t j) {
    std::vector<cplx> spread(n, 0.0);
    for (std::size_t k = 0; k < nx; ++k) spread[k * c.x_stride] = c.values[j * nx + k];
    auto S = fft::forward(spread);
    const double om = c.omega_values[j];
    const double b = p.beta(om);
    const double wgt = std::sqrt(b) * c.omega_weights[j] * c.dx / c.signal_dt;
    for (std::size_t k = 0; k < n; ++k) S[k] *= w.eval_freq(b * (xi[k] - om)) * wgt;
    return S;
  });
  std::vector<cplx> F(n, 0.0);
  for (const auto& S : contrib)
    for (std::size_t k = 0; k < n; ++k) F[k] += S[k];
  return {fft::inverse(F), c.signal_t0, c.signal_dt};
}

/// m(xi_k) on the DFT bins of an n-point grid with spacing dt. Real windows
/// reuse m(-xi) = m(xi).
inline std::vector<double> symbol_on_bins(std::size_t n, double dt, const Window& w, const AlphaParams& p,
                                          double tol = 1e-10) {
  const auto xi = fft::frequencies(n, dt);
  if (p.alpha() == 0.0) return std::vector<double>(n, w.l2_norm_sq);
  std::vector<double> keys;
  for (double v : xi) keys.push_back(w.real_valued ? std::abs(v) : v);
  std::vector<double> uniq = keys;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  auto vals = parallel_map(uniq.size(), [&](std::size_t i) { return eval_m(uniq[i], w, p, tol).value; });
  std::vector<double> m(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto it = std::lower_bound(uniq.begin(), uniq.end(), keys[k]);
    m[k] = vals[static_cast<std::size_t>(it - uniq.begin())];
  }
  return m;
}

inline SampledSignal apply_multiplier(const SampledSignal& f, const std::vector<double>& m) {
  if (m.size() != f.size()) throw DomainError("apply_multiplier: symbol length mismatch");
  auto F = fft::forward(f.samples);
  for (std::size_t k = 0; k < F.size(); ++k) F[k] *= m[k];
  return {fft::inverse(F), f.t0, f.dt};
}

/// A f = IDFT(m * DFT f).
inline SampledSignal apply_frame_operator(const SampledSignal& f, const Window& w, const AlphaParams& p,
                                          double tol = 1e-10) {
  return apply_multiplier(f, symbol_on_bins(f.size(), f.dt, w, p, tol));
}

namespace detail {

inline void require_certificate(const AdmissibilityCertificate* cert, const Window& w, const AlphaParams& p) {
  if (cert == nullptr) throw CertificateError("inverse frame operator needs an admissibility certificate");
  if (cert->status != CertStatus::certified_numerically)
    throw CertificateError(std::string("certificate status is ") + to_string(cert->status));
  if (cert->window_id != w.id || cert->alpha != p.alpha())
    throw CertificateError("certificate was issued for a different window or alpha");
}

}  // namespace detail

/// A^{-1} f = IDFT(DFT f / m). Refuses without a matching certificate or when
/// the sampled symbol drops below the certified lower bound.
inline SampledSignal invert_frame_operator(const SampledSignal& f, const Window& w, const AlphaParams& p,
                                           const AdmissibilityCertificate* cert, double tol = 1e-10) {
  detail::require_certificate(cert, w, p);
  auto m = symbol_on_bins(f.size(), f.dt, w, p, tol);
  for (double& v : m) {
    if (!(v >= cert->A_est * (1.0 - 1e-6)))
      throw CertificateError("sampled symbol " + format_real(v) + " below certified A = " + format_real(cert->A_est));
    v = 1.0 / v;
  }
  return apply_multiplier(f, m);
}

/// W_psi f = V_psi(A^{-1} f).
inline CoefficientGrid second_transform(const SampledSignal& f, const Window& w, const AlphaParams& p,
                                        const AdmissibilityCertificate* cert, const CoefficientGridSpec& spec,
                                        double tol = 1e-10) {
  return analyze(invert_frame_operator(f, w, p, cert, tol), w, p, spec);
}

struct ReproducingReport {
  cplx lhs;        // <f, g>
  cplx rhs_wv;     // <W f, V g>
  cplx rhs_vw;     // <V f, W g>
  double relerr;   // |rhs_wv - lhs| / (||f|| ||g||)
};

inline ReproducingReport reproducing_check(const SampledSignal& f, const SampledSignal& g, const Window& w,
                                           const AlphaParams& p, const AdmissibilityCertificate* cert,
                                           const CoefficientGridSpec& spec, double tol = 1e-10) {
  detail::require_certificate(cert, w, p);
  const auto m = symbol_on_bins(f.size(), f.dt, w, p, tol);
  std::vector<double> inv_m(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) inv_m[k] = 1.0 / m[k];
  const auto Vf = analyze(f, w, p, spec);
  const auto Vg = analyze(g, w, p, spec);
  const auto Wf = analyze(apply_multiplier(f, inv_m), w, p, spec);
  const auto Wg = analyze(apply_multiplier(g, inv_m), w, p, spec);
  ReproducingReport r;
  r.lhs = inner(f, g);
  r.rhs_wv = coefficient_inner(Wf, Vg);
  r.rhs_vw = coefficient_inner(Vf, Wg);
  r.relerr = std::abs(r.rhs_wv - r.lhs) / std::sqrt(f.energy() * g.energy());
  return r;
}

// --- export ---------------------------------------------------------------

/// CSV `x,omega,re,im`, rows ordered by omega, then x.
inline void write_coefficients_csv(std::ostream& os, const CoefficientGrid& c) {
  os << "x,omega,re,im\n";
  for (std::size_t j = 0; j < c.nomega(); ++j)
    for (std::size_t k = 0; k < c.nx(); ++k) {
      const cplx v = c.at(k, j);
      os << format_real(c.x_values[k]) << ',' << format_real(c.omega_values[j]) << ',' << format_real(v.real())
         << ',' << format_real(v.imag()) << '\n';
    }
}

inline void write_coefficients_sidecar(std::ostream& os, const CoefficientGrid& c) {
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_real(v[i]);
    return s + "]";
  };
  os << "{\n";
  os << "  \"alpha\": " << format_real(c.alpha) << ",\n";
  os << "  \"window_id\": " << nlohmann::json(c.window_id).dump() << ",\n";
  os << "  \"x0\": " << format_real(c.x_values.empty() ? 0.0 : c.x_values.front()) << ",\n";
  os << "  \"dx\": " << format_real(c.dx) << ",\n";
  os << "  \"nx\": " << c.nx() << ",\n";
  os << "  \"x_stride\": " << c.x_stride << ",\n";
  os << "  \"omega_values\": " << list(c.omega_values) << ",\n";
  os << "  \"omega_weights\": " << list(c.omega_weights) << ",\n";
  os << "  \"signal\": {\"t0\": " << format_real(c.signal_t0) << ", \"dt\": " << format_real(c.signal_dt)
     << ", \"n\": " << c.signal_n << "}\n";
  os << "}\n";
}

/// Reads a grid written by write_coefficients_csv and its sidecar.
inline CoefficientGrid read_coefficients(std::istream& csv, std::istream& sidecar) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(sidecar);
  } catch (const nlohmann::json::exception& e) {
    throw Error("coefficient sidecar: " + std::string(e.what()));
  }
  CoefficientGrid c;
  try {
    c.alpha = meta.at("alpha").get<double>();
    c.window_id = meta.at("window_id").get<std::string>();
    c.dx = meta.at("dx").get<double>();
    c.x_stride = meta.at("x_stride").get<std::size_t>();
    c.omega_values = meta.at("omega_values").get<std::vector<double>>();
    c.omega_weights = meta.at("omega_weights").get<std::vector<double>>();
    const auto& sig = meta.at("signal");
    c.signal_t0 = sig.at("t0").get<double>();
    c.signal_dt = sig.at("dt").get<double>();
    c.signal_n = sig.at("n").get<std::size_t>();
    const auto nx = meta.at("nx").get<std::size_t>();
    const double x0 = meta.at("x0").get<double>();
    for (std::size_t k = 0; k < nx; ++k) c.x_values.push_back(x0 + static_cast<double>(k) * c.dx);
  } catch (const nlohmann::json::exception& e) {
    throw Error("coefficient sidecar: " + std::string(e.what()));
  }
  if (c.x_stride == 0 || c.nx() * c.x_stride != c.signal_n || c.omega_values.size() != c.omega_weights.size())
    throw Error("coefficient sidecar: inconsistent grid descriptors");
  const auto rows = detail::read_csv_table(csv, "x,omega,re,im", 4);
  if (rows.size() != c.nx() * c.nomega()) throw Error("coefficient csv: row count does not match the sidecar");
  c.values.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t j = i / c.nx(), k = i % c.nx();
    if (std::abs(rows[i][0] - c.x_values[k]) > 1e-9 * std::max(1.0, std::abs(c.x_values[k])) ||
        rows[i][1] != c.omega_values[j])
      throw Error("coefficient csv: row " + std::to_string(i + 1) + " is off the grid");
    c.values.emplace_back(rows[i][2], rows[i][3]);
  }
  return c;
}

}  // namespace amod
