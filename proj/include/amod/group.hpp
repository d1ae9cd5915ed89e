#pragma once

// Affine Weyl-Heisenberg group R^2 x R_+ x R and the sampled action of
//   pi(x, omega, a, tau) = e^{2 pi i tau} T_x M_omega D_a
// with T_x f(t) = f(t - x), M_w f(t) = e^{2 pi i w t} f(t),
// D_a f(t) = a^{-1/2} f(t / a).

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "amod/common.hpp"
#include "amod/fft.hpp"

namespace amod {

struct GroupElement {
  double x = 0.0;
  double omega = 0.0;
  double a = 1.0;
  double tau = 0.0;

  GroupElement() = default;
  GroupElement(double x_, double omega_, double a_, double tau_)
      : x(x_), omega(omega_), a(a_), tau(tau_) {
    if (!(a > 0.0)) throw DomainError("GroupElement: scale a must be positive");
  }

  static GroupElement identity() { return {}; }

  friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

inline GroupElement compose(const GroupElement& g, const GroupElement& h) {
  return {g.x + g.a * h.x, g.omega + h.omega / g.a, g.a * h.a,
          g.tau + h.tau + g.omega * g.a * h.x};
}

inline GroupElement inverse(const GroupElement& g) {
  return {-g.x / g.a, -g.omega * g.a, 1.0 / g.a, -g.tau + g.x * g.omega};
}

inline double distance(const GroupElement& g, const GroupElement& h) {
  return std::max({std::abs(g.x - h.x), std::abs(g.omega - h.omega), std::abs(g.a - h.a),
                   std::abs(g.tau - h.tau)});
}

/// Uniformly sampled complex signal: samples[n] = f(t0 + n dt).
struct SampledSignal {
  std::vector<cplx> samples;
  double t0 = 0.0;
  double dt = 1.0;

  SampledSignal() = default;
  SampledSignal(std::vector<cplx> s, double t0_, double dt_)
      : samples(std::move(s)), t0(t0_), dt(dt_) {
    if (!(dt > 0.0)) throw DomainError("SampledSignal: dt must be positive");
    if (samples.empty()) throw DomainError("SampledSignal: needs at least one sample");
  }

  template <class F>
  static SampledSignal sample(F&& f, double t0, double dt, std::size_t n) {
    std::vector<cplx> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = cplx(f(t0 + static_cast<double>(i) * dt));
    return {std::move(s), t0, dt};
  }

  std::size_t size() const { return samples.size(); }
  double time(std::size_t n) const { return t0 + static_cast<double>(n) * dt; }
  double duration() const { return static_cast<double>(size()) * dt; }
  double nyquist() const { return 0.5 / dt; }

  double energy() const {
    double e = 0.0;
    for (const auto& v : samples) e += std::norm(v);
    return e * dt;
  }
};

/// <f, g> = dt * sum f conj(g). Grids must match.
inline cplx inner(const SampledSignal& f, const SampledSignal& g) {
  if (f.size() != g.size()) throw DomainError("inner: signal lengths differ");
  cplx s = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) s += f.samples[n] * std::conj(g.samples[n]);
  return s * f.dt;
}

inline double l2_distance(const SampledSignal& f, const SampledSignal& g) {
  if (f.size() != g.size()) throw DomainError("l2_distance: signal lengths differ");
  double e = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) e += std::norm(f.samples[n] - g.samples[n]);
  return std::sqrt(e * f.dt);
}

namespace detail {

// Relative energy allowed to leave the band or wrap around the window before
// a sampled operator is declared underresolved.
inline constexpr double kLeakage = 1e-9;

inline void check_leakage(double leaked, double total, const char* what) {
  if (total > 0.0 && leaked > kLeakage * total)
    throw UnderresolutionError(std::string(what) + ": " + format_real(leaked / total) +
                               " of the energy leaves the sampled grid");
}

// Band-limited (trigonometric) interpolant of f evaluated at t_m / a.
inline SampledSignal dilate(const SampledSignal& f, double a) {
  const std::size_t n = f.size();
  const auto spec = fft::forward(f.samples);
  const double period = f.duration();

  double total = 0.0, leaked = 0.0;
  if (a < 1.0) {
    // spectrum stretches by 1/a
    const auto xi = fft::frequencies(n, f.dt);
    for (std::size_t k = 0; k < n; ++k) {
      total += std::norm(spec[k]);
      if (std::abs(xi[k]) > a * f.nyquist()) leaked += std::norm(spec[k]);
    }
  } else {
    // time content at t lands at a * t
    for (std::size_t i = 0; i < n; ++i) {
      total += std::norm(f.samples[i]);
      const double t = a * f.time(i);
      if (t < f.t0 || t >= f.t0 + period) leaked += std::norm(f.samples[i]);
    }
  }
  check_leakage(leaked, total, "dilation");

  const long kmin = -static_cast<long>(n / 2);
  std::vector<cplx> out(n);
  const double scale = 1.0 / (std::sqrt(a) * static_cast<double>(n));
  for (std::size_t m = 0; m < n; ++m) {
    const double s = f.time(m) / a - f.t0;
    const cplx step = std::polar(1.0, 2.0 * kPi * s / period);
    cplx z = std::polar(1.0, 2.0 * kPi * s * static_cast<double>(kmin) / period);
    cplx acc = 0.0;
    for (long k = kmin; k < kmin + static_cast<long>(n); ++k) {
      const std::size_t idx = static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n));
      acc += spec[idx] * z;
      z *= step;
    }
    out[m] = acc * scale;
  }
  return {std::move(out), f.t0, f.dt};
}

inline SampledSignal modulate(const SampledSignal& f, double omega) {
  const std::size_t n = f.size();
  const auto spec = fft::forward(f.samples);
  const auto xi = fft::frequencies(n, f.dt);
  double total = 0.0, leaked = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += std::norm(spec[k]);
    const double shifted = xi[k] + omega;
    if (shifted < -f.nyquist() || shifted >= f.nyquist()) leaked += std::norm(spec[k]);
  }
  check_leakage(leaked, total, "modulation");
  SampledSignal out = f;
  for (std::size_t i = 0; i < n; ++i) out.samples[i] *= std::polar(1.0, 2.0 * kPi * omega * f.time(i));
  return out;
}

inline SampledSignal translate(const SampledSignal& f, double x) {
  const std::size_t n = f.size();
  double total = 0.0, leaked = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += std::norm(f.samples[i]);
    const double t = f.time(i) + x;
    if (t < f.t0 || t >= f.t0 + f.duration()) leaked += std::norm(f.samples[i]);
  }
  check_leakage(leaked, total, "translation");

  const double shift = x / f.dt;
  const double rounded = std::round(shift);
  if (std::abs(shift - rounded) <= 1e-12 * std::max(1.0, std::abs(shift))) {
    const long s = static_cast<long>(rounded);
    const long nn = static_cast<long>(n);
    std::vector<cplx> out(n);
    for (long i = 0; i < nn; ++i) out[static_cast<std::size_t>(((i + s) % nn + nn) % nn)] = f.samples[static_cast<std::size_t>(i)];
    return {std::move(out), f.t0, f.dt};
  }
  auto spec = fft::forward(f.samples);
  const auto xi = fft::frequencies(n, f.dt);
  for (std::size_t k = 0; k < n; ++k) spec[k] *= std::polar(1.0, -2.0 * kPi * xi[k] * x);
  return {fft::inverse(spec), f.t0, f.dt};
}

}  // namespace detail

/// e^{2 pi i tau} T_x M_omega D_a f on the grid of f. Non-grid shifts and all
/// dilations use band-limited interpolation; throws UnderresolutionError when
/// more than a 1e-9 fraction of the energy would alias or wrap.
inline SampledSignal apply_pi(const GroupElement& g, const SampledSignal& f) {
  SampledSignal out = f;
  if (g.a != 1.0) out = detail::dilate(out, g.a);
  if (g.omega != 0.0) out = detail::modulate(out, g.omega);
  if (g.x != 0.0) out = detail::translate(out, g.x);
  if (g.tau != 0.0) {
    const cplx phase = std::polar(1.0, 2.0 * kPi * g.tau);
    for (auto& v : out.samples) v *= phase;
  }
  return out;
}

// --- CSV: header "t,re,im", one row per sample ----------------------------

inline void write_signal_csv(std::ostream& os, const SampledSignal& f) {
  os << "t,re,im\n";
  for (std::size_t n = 0; n < f.size(); ++n)
    os << format_real(f.time(n)) << ',' << format_real(f.samples[n].real()) << ','
       << format_real(f.samples[n].imag()) << '\n';
}

namespace detail {

inline std::vector<std::vector<double>> read_csv_table(std::istream& is, const std::string& header,
                                                      std::size_t columns) {
  std::string line;
  if (!std::getline(is, line)) throw Error("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw Error("csv: expected header '" + header + "', got '" + line + "'");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error("csv: bad number '" + cell + "' on line " + std::to_string(lineno));
      }
    }
    if (row.size() != columns)
      throw Error("csv: expected " + std::to_string(columns) + " columns on line " +
                  std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline SampledSignal read_signal_csv(std::istream& is) {
  auto rows = detail::read_csv_table(is, "t,re,im", 3);
  if (rows.empty()) throw Error("signal csv: no samples");
  std::vector<cplx> s;
  s.reserve(rows.size());
  for (const auto& r : rows) s.emplace_back(r[1], r[2]);
  const double dt = rows.size() > 1 ? (rows.back()[0] - rows.front()[0]) / static_cast<double>(rows.size() - 1) : 1.0;
  for (std::size_t n = 1; n < rows.size(); ++n) {
    if (std::abs(rows[n][0] - rows[n - 1][0] - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      throw Error("signal csv: samples are not uniformly spaced");
  }
  return {std::move(s), rows.front()[0], dt};
}

inline SampledSignal load_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_signal_csv(in);
}

}  // namespace amod
