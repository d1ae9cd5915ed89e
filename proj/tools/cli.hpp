#pragma once

// Command-line front end. `run` is separate from main so tests can drive it
// in-process.

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "amod/amod.hpp"

namespace amod::cli {

enum ExitCode : int { ok = 0, usage = 1, hypothesis_failed = 2, inconclusive = 3 };

struct UsageError : Error {
  using Error::Error;
};

/// "start:stop:step", a single number, or a comma list.
inline std::vector<double> parse_xi_range(const std::string& s) {
  auto num = [&](const std::string& t) {
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size() || !std::isfinite(v)) throw std::invalid_argument(t);
      return v;
    } catch (const std::logic_error&) {
      throw UsageError("bad number '" + t + "' in '" + s + "'");
    }
  };
  std::vector<std::string> parts;
  const char sep = s.find(':') != std::string::npos ? ':' : ',';
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, sep);) parts.push_back(t);
  std::vector<double> out;
  if (sep == ',') {
    for (const auto& t : parts) out.push_back(num(t));
    return out;
  }
  if (parts.size() != 3) throw UsageError("range '" + s + "' must be start:stop:step");
  const double a = num(parts[0]), b = num(parts[1]), h = num(parts[2]);
  if (!(h > 0.0) || b < a) throw UsageError("range '" + s + "' needs step > 0 and stop >= start");
  const auto n = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9)) + 1;
  if (n > 10'000'000) throw UsageError("range '" + s + "' has too many points");
  for (std::size_t i = 0; i < n; ++i) out.push_back(a + static_cast<double>(i) * h);
  return out;
}

/// "d0:d1[:per_decade]" -> 10^d0 .. 10^d1, log-spaced.
inline std::vector<double> parse_xi_log(const std::string& s) {
  std::vector<double> f;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ':');) f.push_back(parse_xi_range(t).at(0));
  if (f.size() < 2 || f.size() > 3 || f[1] < f[0]) throw UsageError("--xi-log expects d0:d1[:per_decade]");
  const double per = f.size() == 3 ? f[2] : 1.0;
  if (!(per >= 1.0) || per != std::floor(per)) throw UsageError("--xi-log: per_decade must be a positive integer");
  const auto n = static_cast<std::size_t>(std::llround((f[1] - f[0]) * per)) + 1;
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::pow(10.0, f[0] + static_cast<double>(i) / per));
  return out;
}

/// Deterministic demo signal: a modulated Gaussian packet on n samples.
inline SampledSignal demo_packet(std::size_t n) {
  const double dt = 1.0 / 16.0;
  const double t0 = -0.5 * dt * static_cast<double>(n);
  return SampledSignal::sample(
      [](double t) { return std::exp(-kPi * t * t / 16.0) * std::polar(1.0, 2.0 * kPi * 2.0 * t); }, t0, dt, n);
}

inline SampledSignal load_signal(const std::string& spec) {
  if (spec.rfind("packet:", 0) == 0) {
    const auto n = parse_xi_range(spec.substr(7)).at(0);
    if (!(n >= 16.0) || n != std::floor(n) || n > 1 << 22) throw UsageError("packet:N needs an integer N >= 16");
    return demo_packet(static_cast<std::size_t>(n));
  }
  return load_signal_csv(spec);
}

struct Settings {
  double alpha = std::nan("");
  std::string window = "gaussian";
  std::string window_meta;
  std::string xi;
  std::string xi_log;
  double xi_max = 1e3;
  double tol = 1e-8;
  std::string out;
  unsigned threads = 0;
  std::string which;
  double A = 5.0;
  bool parts = false;
  std::string signal;
  std::string omega = "-40:40:0.25";
  std::string omega_progressive;
  std::size_t x_stride = 1;
  std::string in;
  std::string in_meta;
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int certify();
  int symbol();
  int decompose();
  int transform();
  int reconstruct();
  int lemma_check();

  Settings s;

 private:
  std::ostream& out_;
  std::ostream& err_;

  AlphaParams alpha() const {
    if (std::isnan(s.alpha)) throw UsageError("--alpha is required");
    return AlphaParams(s.alpha);
  }

  Window window() const {
    if (s.window.rfind("file:", 0) == 0) {
      const std::string csv = s.window.substr(5);
      return load_tabulated(csv, s.window_meta.empty() ? csv + ".json" : s.window_meta);
    }
    return make_window(s.window);
  }

  std::vector<double> xis(std::vector<double> fallback) const {
    if (!s.xi.empty() && !s.xi_log.empty()) throw UsageError("--xi and --xi-log are exclusive");
    if (!s.xi.empty()) return parse_xi_range(s.xi);
    if (!s.xi_log.empty()) return parse_xi_log(s.xi_log);
    if (fallback.empty()) throw UsageError("--xi or --xi-log is required");
    return fallback;
  }

  CoefficientGridSpec omega_grid(const AlphaParams& p) const {
    if (!s.omega_progressive.empty()) {
      const auto f = parse_xi_range(s.omega_progressive);
      if (f.size() != 2) throw UsageError("--omega-progressive expects reach,delta");
      return CoefficientGridSpec::progressive(f[0], f[1], p.alpha(), s.x_stride);
    }
    std::stringstream ss(s.omega);
    std::vector<double> f;
    for (std::string t; std::getline(ss, t, ':');) f.push_back(parse_xi_range(t).at(0));
    if (f.size() != 3) throw UsageError("--omega expects lo:hi:step");
    return CoefficientGridSpec::uniform(f[0], f[1], f[2], s.x_stride);
  }

  /// Writes via `fn` to --out (or stdout when absent).
  void emit(const std::function<void(std::ostream&)>& fn, const std::string& path) const {
    if (path.empty()) {
      fn(out_);
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write " + path);
    fn(f);
    if (!f) throw Error("write failed: " + path);
  }

  int status_code(const AdmissibilityCertificate& c) const {
    switch (c.status) {
      case CertStatus::certified_numerically: return ok;
      case CertStatus::hypothesis_failed: return hypothesis_failed;
      case CertStatus::inconclusive: break;
    }
    return inconclusive;
  }
};

inline int Runner::certify() {
  const auto p = alpha();
  const auto w = window();
  const auto c = amod::certify(w, p, s.xi_max, s.tol);
  emit([&](std::ostream& os) { write_certificate_json(os, c); }, s.out);
  err_ << "status: " << to_string(c.status);
  if (!c.reason.empty()) err_ << " (" << c.reason << ")";
  if (c.status == CertStatus::certified_numerically)
    err_ << "; A " << format_real(c.A_est) << ", B " << format_real(c.B_est) << ", B/A " << format_real(c.conditioning());
  err_ << '\n';
  return status_code(c);
}

inline int Runner::symbol() {
  const auto p = alpha();
  const auto w = window();
  const auto g = sample_symbol(xis({}), w, p, s.tol, s.parts);
  emit([&](std::ostream& os) { write_symbol_csv(os, g); }, s.out);
  return ok;
}

inline int Runner::decompose() {
  const auto p = alpha();
  const auto w = window();
  const auto hyp = check_hypothesis(w, p);
  if (!hyp.pass) {
    err_ << "hypothesis failed: " << hyp.detail << '\n';
    return hypothesis_failed;
  }
  auto x = xis({});
  std::sort(x.begin(), x.end());
  struct Row {
    MParts parts;
    TailBounds tb;
  };
  const auto rows = parallel_map(x.size(), [&](std::size_t i) {
    return Row{eval_m_parts(x[i], w, p, s.tol), tail_bounds(x[i], w, p)};
  });
  emit(
      [&](std::ostream& os) {
        os << "xi,m,part1,part2,part3,part4,bound1,bound2,bound3,bound4_dev,err\n";
        for (std::size_t i = 0; i < x.size(); ++i) {
          const auto& r = rows[i];
          os << format_real(x[i]) << ',' << format_real(r.parts.sum());
          for (double v : r.parts.value) os << ',' << format_real(v);
          for (double v : {r.tb.I1, r.tb.I2, r.tb.I3, r.tb.I4_deviation}) os << ',' << format_real(v);
          os << ',' << format_real(r.parts.total_error()) << '\n';
        }
      },
      s.out);
  return ok;
}

inline int Runner::transform() {
  if (s.signal.empty()) throw UsageError("--signal is required");
  if (s.out.empty()) throw UsageError("--out is required (the sidecar goes to <out>.json)");
  const auto p = alpha();
  const auto w = window();
  const auto f = load_signal(s.signal);
  const auto c = analyze(f, w, p, omega_grid(p));
  emit([&](std::ostream& os) { write_coefficients_csv(os, c); }, s.out);
  emit([&](std::ostream& os) { write_coefficients_sidecar(os, c); }, s.out + ".json");
  err_ << "coefficients: " << c.nx() << " x " << c.nomega() << ", energy " << format_real(c.energy())
       << ", signal energy " << format_real(f.energy()) << '\n';
  return ok;
}

inline int Runner::reconstruct() {
  if (s.in.empty()) throw UsageError("--in is required");
  std::ifstream csv(s.in), meta(s.in_meta.empty() ? s.in + ".json" : s.in_meta);
  if (!csv || !meta) throw UsageError("cannot open coefficients " + s.in + " and its sidecar");
  const auto c = read_coefficients(csv, meta);
  if (std::isnan(s.alpha)) s.alpha = c.alpha;
  const auto p = alpha();
  if (p.alpha() != c.alpha) throw UsageError("--alpha differs from the coefficient sidecar");
  Window w = s.window == "gaussian" && c.window_id != "gaussian" ? make_window(c.window_id) : window();
  if (w.id != c.window_id) throw UsageError("window '" + w.id + "' differs from sidecar '" + c.window_id + "'");
  const auto cert = amod::certify(w, p, s.xi_max, s.tol);
  if (cert.status != CertStatus::certified_numerically) {
    err_ << "status: " << to_string(cert.status) << " (" << cert.reason << ")\n";
    return status_code(cert);
  }
  // synthesis of V f gives A f
  const auto f = invert_frame_operator(synthesize(c, w, p), w, p, &cert, s.tol);
  emit([&](std::ostream& os) { write_signal_csv(os, f); }, s.out);
  return ok;
}

// --- lemma checks -----------------------------------------------------------

namespace detail {

struct Check {
  std::string name;
  std::string claim;
  std::function<bool(Runner&, std::ostream&)> run;
};

inline std::string fr(double v) { return format_real(v); }

inline bool check_symmetry(Runner& r, std::ostream& os, const std::vector<double>& xi, const Window& w,
                           const AlphaParams& p) {
  const auto wc = w.conjugate();
  bool pass = true;
  for (double x : xi) {
    const double lhs = eval_m(-x, w, p, r.s.tol).value;
    const double rhs = eval_m(x, wc, p, r.s.tol).value;
    const bool okp = std::abs(lhs - rhs) <= 2.0 * r.s.tol;
    pass = pass && okp;
    os << "  xi=" << fr(x) << "  m_psi(-xi)=" << fr(lhs) << "  m_conj(psi)(xi)=" << fr(rhs) << "  diff="
       << fr(std::abs(lhs - rhs)) << (okp ? "" : "  <-- exceeds 2 tol") << '\n';
  }
  return pass;
}

inline bool check_positivity(Runner& r, std::ostream& os, const std::vector<double>& xi, const Window& w,
                             const AlphaParams& p) {
  bool pass = true;
  for (double x : xi) {
    const auto m = eval_m(x, w, p, r.s.tol);
    const bool okp = m.value - m.error > 0.0;
    pass = pass && okp;
    os << "  xi=" << fr(x) << "  m=" << fr(m.value) << "  err=" << fr(m.error) << '\n';
  }
  return pass;
}

inline bool check_continuity(Runner& r, std::ostream& os, const std::vector<double>& xi, const Window& w,
                             const AlphaParams& p) {
  bool pass = true;
  for (double x : xi) {
    const double m0 = eval_m(x, w, p, r.s.tol).value;
    double prev = std::numeric_limits<double>::infinity();
    for (double d : {1e-1, 1e-3, 1e-5}) {
      const double diff = std::abs(eval_m(x + d, w, p, r.s.tol).value - m0);
      os << "  xi=" << fr(x) << "  delta=" << fr(d) << "  |m(xi+delta)-m(xi)|=" << fr(diff) << '\n';
      if (diff > prev + 4.0 * r.s.tol) pass = false;
      prev = diff;
    }
    if (prev > 1e-4 * w.l2_norm_sq + 4.0 * r.s.tol) pass = false;
  }
  return pass;
}

inline bool check_derivative(std::ostream& os, const std::vector<double>& xi, const AlphaParams& p) {
  bool pass = true;
  const double h = 1e-6;
  for (double x : xi) {
    for (double om : {-3.0 * x - 7.0, -x, -0.5, 0.25, 0.5 * x + 0.3, x, 2.0 * x + 1.0}) {
      if (om == 0.0) continue;
      const double an = eval_r_prime(x, om, p);
      const double fd = (eval_r(x, om + h, p) - eval_r(x, om - h, p)) / (2.0 * h);
      const double rel = std::abs(an - fd) / std::max(1.0, std::abs(an));
      pass = pass && rel < 1e-5;
      os << "  xi=" << fr(x) << "  omega=" << fr(om) << "  r'=" << fr(an) << "  central difference=" << fr(fd)
         << "  rel=" << fr(rel) << '\n';
    }
  }
  return pass;
}

inline bool check_critical_point(std::ostream& os, const std::vector<double>& xi, const AlphaParams& p) {
  bool pass = true;
  for (double x : xi) {
    const auto g = geometry(x, p);
    const double r_star = eval_r(x, g.omega_star, p);
    const double h_star = eval_h(x, g.omega_star, p);
    const double r0 = eval_r(x, 0.0, p);
    bool okp = std::abs(r_star - g.r_at_star) <= 1e-10 * std::max(1.0, std::abs(g.r_at_star)) &&
               std::abs(h_star) < 1e-10 && std::abs(r0 - x) <= 1e-12 * std::max(1.0, x);
    // sign of the slope on (-inf, w*), (w*, 0), (0, inf)
    int bad = 0;
    const double span = std::abs(g.omega_star) + 1.0;
    for (int i = 1; i < 200; ++i) {
      const double t = i / 200.0;
      const double a = g.omega_star - 10.0 * span * t;
      const double b = g.omega_star * (1.0 - t);
      const double c = 10.0 * span * t;
      bad += eval_r_prime(x, a, p) >= 0.0;
      bad += eval_r_prime(x, b, p) <= 0.0;
      bad += eval_r_prime(x, c, p) >= 0.0;
    }
    okp = okp && bad == 0;
    pass = pass && okp;
    os << "  xi=" << fr(x) << "  omega*=" << fr(g.omega_star) << "  h(omega*)=" << fr(h_star)
       << "  r(omega*)=" << fr(r_star) << "  closed form=" << fr(g.r_at_star) << "  r(0)=" << fr(r0)
       << "  slope sign violations=" << bad << '\n';
  }
  return pass;
}

inline bool check_substitution(Runner& r, std::ostream& os, const std::vector<double>& xi, const Window& w,
                               const AlphaParams& p) {
  bool pass = true;
  const double floor = 1e-12 * w.l2_norm_sq;
  for (double x : xi) {
    for (Part part : {Part::I1, Part::I3, Part::I4}) {
      const double direct = part_integral(x, part, w, p, r.s.tol * 1e-2).value;
      const double subst = substituted_integral(x, part, w, p, r.s.tol * 1e-2).value;
      const double diff = std::abs(direct - subst);
      const bool okp = diff <= 1e-6 * std::max(std::abs(direct), std::abs(subst)) + floor;
      pass = pass && okp;
      os << "  xi=" << fr(x) << "  part=I" << static_cast<int>(part) + 1 << "  direct=" << fr(direct)
         << "  substituted=" << fr(subst) << "  diff=" << fr(diff) << '\n';
    }
  }
  return pass;
}

inline bool check_uniform_limit(Runner& r, std::ostream& os, const std::vector<double>& xi, const AlphaParams& p) {
  bool pass = true;
  for (double x : xi) {
    const double d1 = right_branch_h_deviation(x, r.s.A, p);
    const double d2 = right_branch_h_deviation(10.0 * x, r.s.A, p);
    pass = pass && d2 < d1;
    os << "  A=" << fr(r.s.A) << "  sup|h(r^-1(z))-1| at xi=" << fr(x) << ": " << fr(d1) << "  at xi="
       << fr(10.0 * x) << ": " << fr(d2) << '\n';
  }
  return pass;
}

}  // namespace detail

inline const std::vector<std::pair<std::string, std::string>>& lemma_claims() {
  static const std::vector<std::pair<std::string, std::string>> c = {
      {"symmetry", "m_psi(-xi) = m_conj(psi)(xi)"},
      {"positivity", "m is strictly positive"},
      {"continuity", "m(xi) is continuous in xi"},
      {"derivative", "r_xi'(omega) = -beta(omega) h_xi(omega), h_xi(omega) = 1 + sgn(omega) alpha (xi - omega) / (1 + |omega|)"},
      {"critical-point", "r_xi decreases on (-inf, omega*), increases on (omega*, 0), decreases on (0, inf); "
                         "omega* = (1 - alpha xi) / (1 - alpha), r_xi(0) = xi"},
      {"substitution", "int_I |psi^(r_xi(omega))|^2 beta(omega) domega = int_{r_xi(I)} |psi^(z)|^2 / |h_xi(r_xi^-1(z))| dz "
                       "on the monotone intervals I1, I3, I4"},
      {"uniform-limit", "h_xi(r_xi^-1(z)) -> 1 uniformly on [-A, A] as xi -> inf (right branch)"},
  };
  return c;
}

inline int Runner::lemma_check() {
  const auto p = alpha();
  const auto& claims = lemma_claims();
  auto it = std::find_if(claims.begin(), claims.end(), [&](const auto& c) { return c.first == s.which; });
  if (it == claims.end()) {
    std::string names;
    for (const auto& c : claims) names += (names.empty() ? "" : ", ") + c.first;
    throw UsageError("--which must be one of: " + names);
  }
  auto x = xis({100.0});
  std::ostringstream os;
  os << "check: " << it->first << '\n' << "claim: " << it->second << '\n';
  os << "alpha=" << format_real(p.alpha()) << "  window=" << s.window << "  tol=" << format_real(s.tol) << '\n';
  bool pass = false;
  const auto& n = it->first;
  if (n == "derivative") {
    pass = detail::check_derivative(os, x, p);
  } else if (n == "critical-point") {
    pass = detail::check_critical_point(os, x, p);
  } else if (n == "uniform-limit") {
    pass = detail::check_uniform_limit(*this, os, x, p);
  } else {
    const auto w = window();
    if (n == "symmetry") pass = detail::check_symmetry(*this, os, x, w, p);
    if (n == "positivity") pass = detail::check_positivity(*this, os, x, w, p);
    if (n == "continuity") pass = detail::check_continuity(*this, os, x, w, p);
    if (n == "substitution") pass = detail::check_substitution(*this, os, x, w, p);
  }
  os << (pass ? "PASS" : "FAIL") << '\n';
  emit([&](std::ostream& o) { o << os.str(); }, s.out);
  return pass ? ok : inconclusive;
}

// --- entry point -------------------------------------------------------------

/// Runs the CLI on `args` (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Runner r(out, err);
  auto& s = r.s;
  CLI::App app{"alpha-modulation voice transform: symbol, frame bounds and transforms", "amod"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all commands");
  app.failure_message(CLI::FailureMessage::help);

  auto common = [&](CLI::App* c) {
    c->add_option("--alpha", s.alpha, "alpha in [0, 1)");
    c->add_option("--window", s.window, "gaussian | bspline:n | bump:Omega | chirp:c[,mu] | file:table.csv")
        ->capture_default_str();
    c->add_option("--window-meta", s.window_meta, "sidecar JSON for file: windows (default <csv>.json)");
    c->add_option("--tol", s.tol, "absolute tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--out", s.out, "output path (stdout if omitted)");
    c->add_option("--threads", s.threads, "cap on worker threads (0 = all cores)");
  };
  auto xi_opts = [&](CLI::App* c) {
    c->add_option("--xi", s.xi, "xi values: start:stop:step, a number, or a comma list");
    c->add_option("--xi-log", s.xi_log, "log-spaced xi: d0:d1[:per_decade] (powers of ten)");
  };

  auto* cert = app.add_subcommand("certify", "certify frame bounds, write the certificate JSON");
  common(cert);
  cert->add_option("--xi-max", s.xi_max, "end of the sampled xi range")->capture_default_str();

  auto* sym = app.add_subcommand("symbol", "sample m(xi), write CSV");
  common(sym);
  xi_opts(sym);
  sym->add_flag("--parts", s.parts, "also write the four interval contributions");

  auto* dec = app.add_subcommand("decompose", "interval contributions of m(xi) and their tail bounds");
  common(dec);
  xi_opts(dec);

  auto* tr = app.add_subcommand("transform", "sampled voice transform of a signal");
  common(tr);
  tr->add_option("--signal", s.signal, "signal CSV (t,re,im) or packet:N");
  tr->add_option("--omega", s.omega, "uniform omega grid lo:hi:step")->capture_default_str();
  tr->add_option("--omega-progressive", s.omega_progressive, "progressive omega grid reach,delta");
  tr->add_option("--x-stride", s.x_stride, "keep every n-th sample time")->capture_default_str();

  auto* rec = app.add_subcommand("reconstruct", "recover the signal from voice transform coefficients");
  common(rec);
  rec->add_option("--in", s.in, "coefficient CSV written by transform");
  rec->add_option("--in-meta", s.in_meta, "its sidecar (default <in>.json)");
  rec->add_option("--xi-max", s.xi_max, "xi range for the certificate")->capture_default_str();

  auto* lem = app.add_subcommand("lemma-check", "numerically check one analytic claim about r, h or m");
  common(lem);
  xi_opts(lem);
  lem->add_option("--which", s.which,
                  "symmetry | positivity | continuity | derivative | critical-point | substitution | uniform-limit")
      ->required();
  lem->add_option("--A", s.A, "half-width of the z range (uniform-limit)")->capture_default_str();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? ok : usage;
  }

  set_max_threads(s.threads);
  try {
    if (*cert) return r.certify();
    if (*sym) return r.symbol();
    if (*dec) return r.decompose();
    if (*tr) return r.transform();
    if (*rec) return r.reconstruct();
    return r.lemma_check();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const RangeError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const CertificateError& e) {
    err << "error: " << e.what() << '\n';
    return inconclusive;
  } catch (const ToleranceError& e) {
    err << "inconclusive: " << e.what() << '\n';
    return inconclusive;
  } catch (const UnderresolutionError& e) {
    err << "inconclusive: " << e.what() << '\n';
    return inconclusive;
  } catch (const Error& e) {
    // bad window specs and unreadable inputs
    err << "error: " << e.what() << '\n';
    return usage;
  }
}

}  // namespace amod::cli
