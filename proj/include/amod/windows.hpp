#pragma once

// Analysing windows psi with closed-form (or tabulated) Fourier transforms.
// Fourier convention: psi^(xi) = int psi(t) e^{-2 pi i xi t} dt, so that
// M_w is an exact translation by w in frequency.

// pchip calls isnan unqualified and relies on the global declaration
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "amod/common.hpp"
#include "amod/group.hpp"
#include "amod/quadrature.hpp"

namespace amod {

/// |psi^(xi)| <= C (1 + |xi|)^-r for all xi.
struct Envelope {
  double C = 0.0;
  double r = 0.0;
  double operator()(double xi) const { return C * std::pow(1.0 + std::abs(xi), -r); }
};

struct Window {
  std::string id;
  std::function<cplx(double)> time;
  std::function<cplx(double)> freq;
  double decay_C = 0.0;
  double decay_r = 0.0;
  /// All envelopes the window can certify. Bounds that need an envelope take
  /// the best one; always contains {decay_C, decay_r}.
  std::vector<Envelope> envelopes;
  double l2_norm_sq = 0.0;
  bool freq_continuous = true;
  /// psi(t) is real, hence |psi^| is even and m(-xi) = m(xi).
  bool real_valued = false;
  std::optional<Interval> time_support;
  std::optional<Interval> freq_support;
  /// Typical length of features of |psi^|^2 (lobe width, Gaussian width).
  double freq_scale = 1.0;

  cplx eval_time(double t) const { return time(t); }
  cplx eval_freq(double xi) const { return freq(xi); }
  double power(double xi) const { return std::norm(freq(xi)); }

  /// The window t -> conj(psi(t)); its transform is xi -> conj(psi^(-xi)).
  Window conjugate() const {
    Window w = *this;
    w.id = id + "*";
    auto t = time;
    auto f = freq;
    w.time = [t](double s) { return std::conj(t(s)); };
    w.freq = [f](double xi) { return std::conj(f(-xi)); };
    if (freq_support) w.freq_support = Interval{-freq_support->hi, -freq_support->lo};
    return w;
  }
};

/// Spot-checks |psi^(xi)| <= C (1+|xi|)^-r on n points of [lo, hi].
inline bool envelope_holds(const Window& w, const Envelope& env, double lo, double hi,
                           std::size_t n = 20001) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    if (std::abs(w.eval_freq(xi)) > env(xi) * (1.0 + 1e-12)) return false;
  }
  return true;
}

class AlphaParams {
 public:
  explicit AlphaParams(double alpha) : alpha_(alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in [0, 1)");
  }

  double alpha() const { return alpha_; }
  /// Decay exponent the window must strictly exceed: max{1, alpha / (2 (1 - alpha))}.
  double r_threshold() const { return std::max(1.0, alpha_ / (2.0 * (1.0 - alpha_))); }
  double beta(double omega) const { return std::pow(1.0 + std::abs(omega), -alpha_); }

 private:
  double alpha_;
};

struct HypothesisVerdict {
  bool pass = false;
  double threshold = 0.0;
  double decay_r = 0.0;
  bool freq_continuous = false;
  std::string detail;
};

inline HypothesisVerdict check_hypothesis(const Window& w, const AlphaParams& p) {
  HypothesisVerdict v;
  v.threshold = p.r_threshold();
  v.decay_r = w.decay_r;
  v.freq_continuous = w.freq_continuous;
  if (!w.freq_continuous) {
    v.detail = "fourier transform of the window is not continuous";
  } else if (!(w.decay_r > v.threshold)) {
    v.detail = "decay exponent r = " + format_real(w.decay_r) +
               " does not exceed max{1, alpha/(2(1-alpha))} = " + format_real(v.threshold);
  } else {
    v.pass = true;
    v.detail = "r = " + format_real(w.decay_r) + " > " + format_real(v.threshold);
  }
  return v;
}

namespace detail {

// int_lo^hi F(xi) e^{2 pi i xi t} dxi with panels fine enough for the
// oscillation at t. F must be smooth on [lo, hi].
template <class F>
cplx inverse_fourier(const F& spectrum, double lo, double hi, double t, std::size_t min_panels = 16) {
  using rule = boost::math::quadrature::gauss<double, 20>;
  const auto& x = rule::abscissa();
  const auto& wts = rule::weights();
  const std::size_t panels =
      std::max<std::size_t>(min_panels, static_cast<std::size_t>(std::ceil(2.0 * std::abs(t) * (hi - lo))));
  const double h = (hi - lo) / static_cast<double>(panels);
  cplx acc = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double c = lo + (static_cast<double>(p) + 0.5) * h;
    auto term = [&](double xi) { return spectrum(xi) * std::polar(1.0, 2.0 * kPi * xi * t); };
    // boost stores the nonnegative nodes only; an even rule has no node at 0
    cplx s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += x[i] == 0.0 ? wts[i] * term(c) : wts[i] * (term(c - 0.5 * h * x[i]) + term(c + 0.5 * h * x[i]));
    acc += 0.5 * h * s;
  }
  return acc;
}

// max over xi >= 0 of g(xi), assuming a single interior maximum on [lo, hi]
// after a dense scan.
template <class G>
double maximise(const G& g, double lo, double hi, std::size_t scan = 4001) {
  double best_x = lo, best = g(lo);
  for (std::size_t i = 1; i < scan; ++i) {
    const double xi = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(scan - 1);
    const double v = g(xi);
    if (v > best) {
      best = v;
      best_x = xi;
    }
  }
  const double step = (hi - lo) / static_cast<double>(scan - 1);
  const double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
  auto res = boost::math::tools::brent_find_minima([&](double xi) { return -g(xi); }, a, b,
                                                   std::numeric_limits<double>::digits);
  return std::max(best, -res.second);
}

// Centered cardinal B-spline of order n (degree n), support [-(n+1)/2, (n+1)/2].
inline double bspline_value(int n, double t) {
  const double half = 0.5 * (n + 1);
  if (t <= -half || t >= half) return 0.0;
  double sum = 0.0;
  double binom = 1.0;
  double fact = 1.0;
  for (int i = 2; i <= n; ++i) fact *= i;
  for (int k = 0; k <= n + 1; ++k) {
    const double u = t + half - k;
    if (u > 0.0) sum += ((k % 2) ? -1.0 : 1.0) * binom * std::pow(u, n);
    binom = binom * (n + 1 - k) / (k + 1);
  }
  return sum / fact;
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

// Integral of |spectrum|^2 over a finite interval, adaptively.
template <class F>
double power_integral(const F& spectrum, double lo, double hi, double scale, double tol = 1e-13) {
  std::vector<double> anchors{0.0};
  auto knots = quad::graded_partition(lo, hi, anchors, [&](double) { return scale; }, 0.0);
  quad::Options opt;
  opt.abs_tol = tol;
  return quad::integrate([&](double xi) { return std::norm(spectrum(xi)); }, knots, opt).value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Families

/// psi(t) = 2^{1/4} e^{-pi t^2}; self-dual, unit norm.
inline Window make_gaussian() {
  const double amp = std::pow(2.0, 0.25);
  Window w;
  w.id = "gaussian";
  w.time = [amp](double t) { return cplx(amp * std::exp(-kPi * t * t)); };
  w.freq = w.time;
  // sup_xi amp e^{-pi xi^2} (1+xi)^r is attained where 2 pi xi (1 + xi) = r.
  for (int r = 1; r <= 64; ++r) {
    const double xs = 0.5 * (-1.0 + std::sqrt(1.0 + 2.0 * r / kPi));
    const double C = amp * std::exp(-kPi * xs * xs) * std::pow(1.0 + xs, r) * (1.0 + 1e-12);
    w.envelopes.push_back({C, static_cast<double>(r)});
  }
  w.decay_C = w.envelopes.back().C;
  w.decay_r = w.envelopes.back().r;
  w.l2_norm_sq = 1.0;
  w.real_valued = true;
  w.freq_scale = 0.5;
  return w;
}

/// Linear chirp with a frequency offset:
/// psi(t) = 2^{1/4} e^{-pi (1 - i c) t^2} e^{2 pi i mu t}. Unit norm.
inline Window make_chirp_gaussian(double chirp, double mu = 0.0) {
  const double amp = std::pow(2.0, 0.25);
  const cplx lambda(1.0, -chirp);
  const cplx root = std::sqrt(lambda);
  Window w;
  w.id = "chirp:" + format_real(chirp) + "," + format_real(mu);
  w.time = [=](double t) {
    return amp * std::exp(-kPi * lambda * t * t) * std::polar(1.0, 2.0 * kPi * mu * t);
  };
  w.freq = [=](double xi) { return amp / root * std::exp(-kPi * (xi - mu) * (xi - mu) / lambda); };
  const double s = 1.0 + chirp * chirp;
  const double peak = amp * std::pow(s, -0.25);
  for (int r = 1; r <= 64; ++r) {
    // stationary points of e^{-pi (xi - m)^2 / s} (1 + xi)^r on xi >= 0, for m = +-mu
    double C = 0.0;
    for (double m : {mu, -mu}) {
      const double b = 1.0 - m;
      const double xs = std::max(0.0, 0.5 * (-b + std::sqrt(b * b + 4.0 * (m + r * s / (2.0 * kPi)))));
      C = std::max(C, peak * std::exp(-kPi * (xs - m) * (xs - m) / s) * std::pow(1.0 + xs, r));
    }
    w.envelopes.push_back({C * (1.0 + 1e-12), static_cast<double>(r)});
  }
  w.decay_C = w.envelopes.back().C;
  w.decay_r = w.envelopes.back().r;
  w.l2_norm_sq = 1.0;
  w.real_valued = chirp == 0.0 && mu == 0.0;
  w.freq_scale = 0.5 * std::sqrt(s);
  return w;
}

/// B_n: n-fold self-convolution of the unit box (degree n), centered.
/// psi^(xi) = sinc(xi)^{n+1}, compactly supported in time.
inline Window make_bspline(int n) {
  if (n < 1) throw DomainError("bspline order must be >= 1");
  Window w;
  w.id = "bspline:" + std::to_string(n);
  w.time = [n](double t) { return cplx(detail::bspline_value(n, t)); };
  w.freq = [n](double xi) { return cplx(std::pow(detail::sinc(xi), n + 1)); };
  // |sinc x| (1 + |x|) <= K with the maximum on [0, 1]; beyond 1 the product
  // stays below 2 / pi < 1.
  const double K =
      detail::maximise([](double x) { return (1.0 + x) * std::abs(detail::sinc(x)); }, 0.0, 1.0);
  w.decay_r = n + 1;
  w.decay_C = std::pow(K, n + 1) * (1.0 + 1e-12);
  w.envelopes = {{w.decay_C, w.decay_r}};
  // <B_n, B_n> = B_{2n+1}(0)
  w.l2_norm_sq = detail::bspline_value(2 * n + 1, 0.0);
  w.real_valued = true;
  w.time_support = Interval{-0.5 * (n + 1), 0.5 * (n + 1)};
  w.freq_scale = 1.0;
  return w;
}

/// Smooth bump spectrum psi^(xi) = exp(1 - 1 / (1 - (xi/Omega)^2)) on
/// (-Omega, Omega), zero elsewhere; peak value 1 at xi = 0.
inline Window make_bandlimited_bump(double omega_max) {
  if (!(omega_max > 0.0)) throw DomainError("bump bandwidth must be positive");
  const double W = omega_max;
  auto spectrum = [W](double xi) -> double {
    const double u = xi / W;
    if (std::abs(u) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
  };
  Window w;
  w.id = "bump:" + format_real(W);
  w.freq = [spectrum](double xi) { return cplx(spectrum(xi)); };
  w.time = [spectrum, W](double t) { return cplx(detail::inverse_fourier(spectrum, -W, W, t, 32).real()); };
  for (int r = 1; r <= 64; ++r) {
    const double C = detail::maximise(
        [&](double xi) { return spectrum(xi) * std::pow(1.0 + xi, r); }, 0.0, W);
    w.envelopes.push_back({C * (1.0 + 1e-9), static_cast<double>(r)});
  }
  w.decay_C = w.envelopes.back().C;
  w.decay_r = w.envelopes.back().r;
  w.l2_norm_sq = detail::power_integral(w.freq, -W, W, W / 16.0);
  w.real_valued = true;
  w.freq_support = Interval{-W, W};
  w.freq_scale = W / 4.0;
  return w;
}

/// Window given by samples of psi^ on an increasing xi grid, interpolated by
/// piecewise cubic Hermite (pchip) in real and imaginary part and zero
/// outside the table. Decay metadata is declared by the user.
inline Window make_tabulated(std::vector<double> xi, std::vector<cplx> values, double decay_C,
                             double decay_r, double l2_norm_sq, std::string id = "tabulated") {
  if (xi.size() < 4 || xi.size() != values.size())
    throw DomainError("tabulated window needs at least 4 (xi, value) pairs");
  for (std::size_t i = 1; i < xi.size(); ++i)
    if (!(xi[i] > xi[i - 1])) throw DomainError("tabulated window: xi must be strictly increasing");
  std::vector<double> re, im;
  double vmax = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    re.push_back(values[i].real());
    im.push_back(values[i].imag());
    vmax = std::max(vmax, std::abs(values[i]));
    if (i > 0) min_gap = std::min(min_gap, xi[i] - xi[i - 1]);
  }
  const double lo = xi.front(), hi = xi.back();
  // Symmetric table with conj(psi^(-xi)) = psi^(xi) <=> psi real.
  bool hermitian = std::abs(lo + hi) <= 1e-12 * (hi - lo);
  for (std::size_t i = 0; hermitian && i < values.size(); ++i) {
    const std::size_t j = values.size() - 1 - i;
    hermitian = std::abs(xi[i] + xi[j]) <= 1e-9 * (hi - lo) &&
                std::abs(values[i] - std::conj(values[j])) <= 1e-12 * std::max(vmax, 1e-300);
  }
  const bool continuous = std::abs(values.front()) <= 1e-12 * vmax && std::abs(values.back()) <= 1e-12 * vmax;

  using boost::math::interpolators::pchip;
  auto re_i = std::make_shared<pchip<std::vector<double>>>(std::vector<double>(xi), std::move(re));
  auto im_i = std::make_shared<pchip<std::vector<double>>>(std::move(xi), std::move(im));
  Window w;
  w.id = std::move(id);
  w.freq = [re_i, im_i, lo, hi](double x) -> cplx {
    if (x < lo || x > hi) return 0.0;
    return {(*re_i)(x), (*im_i)(x)};
  };
  auto f = w.freq;
  w.time = [f, lo, hi](double t) { return detail::inverse_fourier(f, lo, hi, t, 64); };
  w.decay_C = decay_C;
  w.decay_r = decay_r;
  w.envelopes = {{decay_C, decay_r}};
  w.l2_norm_sq = l2_norm_sq;
  w.freq_continuous = continuous;
  w.real_valued = hermitian;
  w.freq_support = Interval{lo, hi};
  w.freq_scale = std::max(4.0 * min_gap, (hi - lo) / 1000.0);
  return w;
}

/// Loads a tabulated window from a CSV `xi,re,im` and a JSON sidecar
/// `{"decay_C": ..., "decay_r": ..., "l2_norm_sq": ...}`.
inline Window load_tabulated(const std::string& csv_path, const std::string& json_path) {
  std::ifstream csv(csv_path);
  if (!csv) throw Error("cannot open " + csv_path);
  auto rows = detail::read_csv_table(csv, "xi,re,im", 3);
  std::ifstream js(json_path);
  if (!js) throw Error("cannot open " + json_path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw Error("window sidecar: " + std::string(e.what()));
  }
  for (const char* key : {"decay_C", "decay_r", "l2_norm_sq"})
    if (!meta.contains(key) || !meta[key].is_number())
      throw Error(std::string("window sidecar: missing numeric field '") + key + "'");
  std::vector<double> xi;
  std::vector<cplx> v;
  for (const auto& r : rows) {
    xi.push_back(r[0]);
    v.emplace_back(r[1], r[2]);
  }
  return make_tabulated(std::move(xi), std::move(v), meta["decay_C"].get<double>(),
                        meta["decay_r"].get<double>(), meta["l2_norm_sq"].get<double>(),
                        "file:" + csv_path);
}

struct WindowValidation {
  bool envelope_ok = false;
  bool norm_ok = false;
  double norm_quadrature = 0.0;
  std::string detail;
  bool ok() const { return envelope_ok && norm_ok; }
};

/// Checks declared metadata against the window itself: the decay envelope on
/// a dense grid and l2_norm_sq against quadrature of |psi^|^2.
inline WindowValidation validate(const Window& w) {
  WindowValidation v;
  const double lo = w.freq_support ? w.freq_support->lo - 1.0 : -200.0;
  const double hi = w.freq_support ? w.freq_support->hi + 1.0 : 200.0;
  v.envelope_ok = envelope_holds(w, {w.decay_C, w.decay_r}, lo, hi);
  if (w.freq_support) {
    v.norm_quadrature = detail::power_integral(w.freq, w.freq_support->lo, w.freq_support->hi,
                                               w.freq_scale / 4.0, 1e-12);
  } else {
    v.norm_quadrature = detail::power_integral(w.freq, -200.0, 200.0, w.freq_scale / 4.0, 1e-12);
  }
  v.norm_ok = std::abs(v.norm_quadrature - w.l2_norm_sq) <= 1e-8 * std::max(1.0, w.l2_norm_sq);
  if (!v.envelope_ok) v.detail += "declared (C, r) envelope is violated; ";
  if (!v.norm_ok)
    v.detail += "declared l2_norm_sq " + format_real(w.l2_norm_sq) + " differs from quadrature " +
                format_real(v.norm_quadrature) + "; ";
  return v;
}

/// Parses "gaussian", "bspline:n", "bump:Omega", "chirp:c[,mu]".
inline Window make_window(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  try {
    if (family == "gaussian" && args.empty()) return make_gaussian();
    if (family == "bspline") return make_bspline(std::stoi(args));
    if (family == "bump") return make_bandlimited_bump(std::stod(args));
    if (family == "chirp") {
      const auto comma = args.find(',');
      const double c = std::stod(args.substr(0, comma));
      const double mu = comma == std::string::npos ? 0.0 : std::stod(args.substr(comma + 1));
      return make_chirp_gaussian(c, mu);
    }
  } catch (const std::logic_error&) {
    // fall through
  }
  throw Error("unknown window spec '" + spec + "'");
}

}  // namespace amod
