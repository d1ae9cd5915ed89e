#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "amod/symbol.hpp"

using namespace amod;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// High-precision reference values of m(xi) for the unit Gaussian, computed
// once with 40-digit quadrature (tests/oracles/gaussian_symbol_oracle.py).
struct Frozen {
  double alpha, xi, m;
};
constexpr Frozen kGaussianOracle[] = {
    {0.3, 1e2, 0.99998507542373458961}, {0.3, 1e3, 0.99999939832372127506}, {0.3, 1e4, 0.99999997601661094386},
    {0.5, 1e2, 1.0},                    {0.5, 1e3, 1.0},                    {0.5, 1e4, 1.0},
    {0.7, 1e2, 1.0013949858031411608},  {0.7, 1e3, 1.0003527689215392361},  {0.7, 1e4, 1.0000886895725407878},
    {0.5, 0.0, 1.1104225469},           {0.5, 1.0, 1.0002658},
};

// B_1, alpha = 0.5 (tests/oracles/bspline_symbol_oracle.py, scipy).
constexpr Frozen kBsplineOracle[] = {
    {0.5, 0.0, 0.735422624642876},  {0.5, 0.5, 0.677494438506605},   {0.5, 1.0, 0.668131183983358},
    {0.5, 2.0, 0.666993431775853},  {0.5, 5.0, 0.666731445853822},   {0.5, 10.0, 0.6666884630982},
    {0.5, 100.0, 0.666667312394769}, {0.5, 1000.0, 0.666666691524559}, {0.5, 10000.0, 0.666666667395015},
};

}  // namespace

TEST_CASE("r, r' and h on worked values") {
  const AlphaParams p(0.5);
  CHECK(eval_r(10, 0, p) == 10.0);
  CHECK(eval_r(10, 0, AlphaParams(0.83)) == 10.0);
  CHECK_THAT(eval_r(10, -8, p), WithinAbs(6.0, 1e-14));
  CHECK(eval_r(7.5, 7.5, p) == 0.0);
  CHECK_THAT(eval_r_prime(10, 3, p), WithinAbs(-0.9375, 1e-14));
  CHECK_THAT(eval_h(10, 3, p), WithinAbs(1.875, 1e-14));
  CHECK_THROWS_AS(eval_r_prime(10, 0, p), DomainError);
  CHECK_THROWS_AS(eval_h(10, 0, p), DomainError);
  // h tends to 1 - alpha at +infinity
  CHECK_THAT(eval_h(10, 1e12, p), WithinAbs(0.5, 1e-10));
  CHECK_THAT(eval_h(10, 1e12, AlphaParams(0.3)), WithinAbs(0.7, 1e-10));
}

TEST_CASE("r' = -beta h and finite differences at random points") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ua(0.05, 0.95), ux(-200.0, 2000.0), uw(-3000.0, 3000.0);
  for (int i = 0; i < 1000; ++i) {
    const AlphaParams p(ua(rng));
    const double xi = ux(rng);
    double om = uw(rng);
    if (std::abs(om) < 1e-3) om = 1.0;
    const double d = eval_r_prime(xi, om, p);
    CHECK(d == -p.beta(om) * eval_h(xi, om, p));
    const double fd = (eval_r(xi, om + 1e-6, p) - eval_r(xi, om - 1e-6, p)) / 2e-6;
    CHECK(std::abs(fd - d) <= 1e-5 * std::max(1.0, std::abs(d)));
  }
}

TEST_CASE("geometry at xi = 10, alpha = 0.5") {
  const AlphaParams p(0.5);
  const auto g = geometry(10, p);
  CHECK_THAT(g.omega_star, WithinAbs(-8.0, 1e-14));
  CHECK_THAT(g.r_at_star, WithinAbs(6.0, 1e-10));
  CHECK_THAT(g.half_width, WithinAbs(0.5 * std::sqrt(10.0), 1e-14));
  CHECK_THAT(eval_r(10, g.omega_star, p), WithinAbs(g.r_at_star, 1e-10));
  CHECK_THAT(eval_r_prime(10, g.omega_star, p), WithinAbs(0.0, 1e-10));
  CHECK_THAT(eval_h(10, g.omega_star, p), WithinAbs(0.0, 1e-12));
}

TEST_CASE("geometry invariants and closed forms") {
  for (double a : {0.1, 0.3, 0.5, 2.0 / 3.0, 0.7, 0.9}) {
    const AlphaParams p(a);
    for (double xi : {2.0 / a * 1.001, 2.0 / a + 1.0, 50.0 / a, 1e3, 1e5}) {
      if (!(xi > 2.0 / a)) continue;
      const auto g = geometry(xi, p);
      INFO("alpha " << a << " xi " << xi);
      CHECK(g.omega_star < 0.0);
      CHECK(g.intervals[1].hi < 0.0);
      CHECK(std::isinf(g.intervals[0].lo));
      CHECK(std::isinf(g.intervals[3].hi));
      for (int k = 0; k < 3; ++k) CHECK(g.intervals[k].hi == g.intervals[k + 1].lo);
      CHECK(g.intervals[3].lo == 0.0);
      CHECK_THAT(eval_r(xi, g.omega_star, p), WithinRel(g.r_at_star, 1e-10));
      CHECK_THAT(g.z1, WithinRel(eval_r(xi, g.intervals[0].hi, p), 1e-10));
      CHECK_THAT(g.z2, WithinRel(eval_r(xi, g.intervals[2].lo, p), 1e-10));
      // the quoted infimum forms equal |h| at the interval ends, and |h| is
      // monotone away from the critical point, so they are the infima
      CHECK_THAT(g.inf_h_I1, WithinRel(std::abs(eval_h(xi, g.intervals[0].hi, p)), 1e-9));
      CHECK_THAT(g.inf_h_I3, WithinRel(std::abs(eval_h(xi, g.intervals[2].lo, p)), 1e-9));
      double m1 = 1e300, m3 = 1e300;
      for (int i = 0; i <= 2000; ++i) {
        const double t = i / 2000.0;
        m1 = std::min(m1, std::abs(eval_h(xi, g.intervals[0].hi - t * 10.0 * (1.0 + std::abs(g.omega_star)), p)));
        const double w3 = g.intervals[2].lo + t * (0.0 - g.intervals[2].lo);
        if (w3 < 0.0) m3 = std::min(m3, std::abs(eval_h(xi, w3, p)));
      }
      CHECK(m1 >= g.inf_h_I1 * (1.0 - 1e-9));
      CHECK(m3 >= g.inf_h_I3 * (1.0 - 1e-9));
    }
  }
  CHECK_THROWS_AS(geometry(4.0, AlphaParams(0.5)), DomainError);
  CHECK_THROWS_AS(geometry(100.0, AlphaParams(0.0)), DomainError);
}

TEST_CASE("monotonicity of r on the three branches") {
  for (double a : {0.3, 0.5, 0.8}) {
    const AlphaParams p(a);
    const double xi = 40.0 / a;
    const double ws = geometry(xi, p).omega_star;
    int bad = 0;
    for (int i = 1; i < 1000; ++i) {
      const double t = i / 1000.0;
      const double h = 1e-4;
      const double w1 = ws - 20.0 * (1.0 + std::abs(ws)) * t, w2 = ws * (1.0 - t), w3 = 1e3 * t;
      bad += eval_r(xi, w1 + h, p) - eval_r(xi, w1 - h, p) >= 0.0;
      bad += eval_r(xi, w2 + h, p) - eval_r(xi, w2 - h, p) <= 0.0;
      bad += eval_r(xi, w3 + h, p) - eval_r(xi, w3 - h, p) >= 0.0;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("r covers the whole line") {
  for (double a : {0.1, 0.5, 0.9}) {
    const AlphaParams p(a);
    CHECK(eval_r(10.0, 1e8, p) < -1e8 * std::pow(1e8, -a) * 0.99);
    CHECK(eval_r(10.0, -1e8, p) > 1e8 * std::pow(1e8, -a) * 0.99);
  }
}

TEST_CASE("branch inversion") {
  const AlphaParams p(0.5);
  CHECK(invert_r_branch(10, 10, Branch::right, p) == 0.0);
  CHECK_THAT(invert_r_branch(10, 6, Branch::left, p), WithinAbs(-8.0, 1e-9));
  CHECK_THROWS_AS(invert_r_branch(10, 11, Branch::right, p), RangeError);
  CHECK_THROWS_AS(invert_r_branch(10, 5, Branch::left, p), RangeError);
  CHECK_THROWS_AS(invert_r_branch(10, 11, Branch::middle, p), RangeError);

  std::mt19937_64 rng(22);
  for (double a : {0.3, 0.5, 0.7}) {
    const AlphaParams q(a);
    for (double xi : {2.0 / a + 0.5, 100.0, 1e4}) {
      const auto g = geometry(xi, q);
      std::uniform_real_distribution<double> zl(g.r_at_star, g.r_at_star + 10.0 * xi);
      std::uniform_real_distribution<double> zm(g.r_at_star, xi);
      std::uniform_real_distribution<double> zr(-10.0 * xi, xi);
      for (int i = 0; i < 100; ++i) {
        for (auto [branch, z] : {std::pair{Branch::left, zl(rng)}, {Branch::middle, zm(rng)}, {Branch::right, zr(rng)}}) {
          const double w = invert_r_branch(xi, z, branch, q);
          INFO("alpha " << a << " xi " << xi << " branch " << to_string(branch) << " z " << z);
          CHECK(std::abs(eval_r(xi, w, q) - z) < 1e-10 * (1.0 + std::abs(z)));
          if (branch == Branch::left) CHECK(w <= g.omega_star);
          if (branch == Branch::middle) CHECK((w >= g.omega_star && w <= 0.0));
          if (branch == Branch::right) CHECK(w >= 0.0);
        }
      }
    }
  }
}

TEST_CASE("alpha = 0 gives the squared norm") {
  const AlphaParams p(0.0);
  for (double xi : {-5.0, 0.0, 1.0, 10.0, 100.0}) {
    CHECK(eval_m(xi, make_gaussian(), p, 1e-10).value == 1.0);
    CHECK(eval_m(xi, make_bspline(2), p, 1e-10).value == make_bspline(2).l2_norm_sq);
  }
}

TEST_CASE("gaussian symbol matches the high-precision oracle") {
  const auto w = make_gaussian();
  for (const auto& o : kGaussianOracle) {
    const auto m = eval_m(o.xi, w, AlphaParams(o.alpha), 1e-12);
    INFO("alpha " << o.alpha << " xi " << o.xi << " m " << format_real(m.value));
    // the two small-xi references carry fewer digits
    CHECK(std::abs(m.value - o.m) < (o.xi < 2.0 ? 1e-7 : 1e-11));
    CHECK(m.error < 1e-11);
  }
}

TEST_CASE("bspline symbol matches the reference quadrature") {
  const auto w = make_bspline(1);
  for (const auto& o : kBsplineOracle) {
    const auto m = eval_m(o.xi, w, AlphaParams(o.alpha), 1e-12);
    INFO("xi " << o.xi << " m " << format_real(m.value));
    CHECK(std::abs(m.value - o.m) < 1e-9);
  }
}

TEST_CASE("m is positive, even for real windows and symmetric under conjugation") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-300.0, 300.0);
  const AlphaParams p(0.6);
  const auto b = make_bspline(2);
  const auto c = make_chirp_gaussian(1.5, 0.7);
  const auto cc = c.conjugate();
  const double tol = 1e-10;
  for (int i = 0; i < 20; ++i) {
    const double xi = u(rng);
    const double mb = eval_m(xi, b, p, tol).value;
    CHECK(mb > 0.0);
    CHECK(std::abs(mb - eval_m(-xi, b, p, tol).value) <= 2.0 * tol);
    const double lhs = eval_m(-xi, c, p, tol).value;
    CHECK(lhs > 0.0);
    CHECK(std::abs(lhs - eval_m(xi, cc, p, tol).value) <= 2.0 * tol);
  }
  // the chirp symbol itself is not even
  CHECK(std::abs(eval_m(1.0, c, p, tol).value - eval_m(-1.0, c, p, tol).value) > 1e-4);
}

TEST_CASE("m is continuous") {
  const AlphaParams p(0.5);
  const auto w = make_bspline(1);
  for (double xi : {0.0, 3.7, 150.0}) {
    const double m0 = eval_m(xi, w, p, 1e-12).value;
    double prev = 1.0;
    for (double d : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      const double diff = std::abs(eval_m(xi + d, w, p, 1e-12).value - m0);
      CHECK(diff <= prev + 4e-12);
      prev = diff;
    }
    CHECK(prev < 1e-6);
  }
}

TEST_CASE("integrand stays under the decay envelope at every node") {
  const AlphaParams p(0.5);
  for (const auto& w : {make_bspline(1), make_gaussian(), make_chirp_gaussian(1.0, 0.5)}) {
    for (double xi : {0.0, 7.0, 300.0, -40.0}) {
      std::size_t nodes = 0, bad = 0;
      SymbolOptions opt;
      opt.observer = [&](double om, double val) {
        ++nodes;
        const double b = p.beta(om);
        double bound = std::numeric_limits<double>::infinity();
        for (const auto& env : w.envelopes)
          bound = std::min(bound, env.C * env.C * b * 2.0 * std::pow(0.5 + b * std::abs(xi - om), -2.0 * env.r));
        if (val > bound * (1.0 + 1e-12)) ++bad;
      };
      eval_m(xi, w, p, 1e-10, opt);
      INFO(w.id << " xi " << xi);
      CHECK(nodes > 100);
      CHECK(bad == 0);
    }
  }
}

TEST_CASE("four-part decomposition") {
  const AlphaParams p(0.5);
  const auto b1 = make_bspline(1);
  const double m = eval_m(200.0, b1, p, 1e-12).value;
  const auto parts = eval_m_parts(200.0, b1, p, 1e-12);
  CHECK(std::abs(parts.sum() - m) / m < 1e-8);
  for (double v : parts.value) CHECK(v >= 0.0);

  double prev_i2 = 1e300, prev_dev = 1e300;
  for (double xi : {1e2, 1e3, 1e4}) {
    const auto q = eval_m_parts(xi, b1, p, 1e-12);
    CHECK(q.value[1] < prev_i2);
    prev_i2 = q.value[1];
    const double dev = std::abs(q.value[3] - b1.l2_norm_sq);
    CHECK(dev < prev_dev);
    prev_dev = dev;
  }
  CHECK(prev_dev < 0.02 * b1.l2_norm_sq);
  CHECK_THROWS_AS(eval_m_parts(3.0, b1, p, 1e-10), DomainError);
  CHECK(eval_m(3.0, b1, p, 1e-10).value > 0.0);
}

TEST_CASE("substituted and direct quadratures agree on the monotone intervals") {
  const AlphaParams p(0.5);
  for (const auto& w : {make_gaussian(), make_bspline(1), make_bspline(3)}) {
    for (double xi : {100.0, 2000.0}) {
      for (Part part : {Part::I1, Part::I3, Part::I4}) {
        const auto s = substituted_integral(xi, part, w, p, 1e-13);
        const auto d = part_integral(xi, part, w, p, 1e-13);
        INFO(w.id << " xi " << xi << " part " << static_cast<int>(part) + 1 << " subst " << format_real(s.value)
                  << " direct " << format_real(d.value));
        CHECK(std::abs(s.value - d.value) <= 1e-6 * std::max(s.value, d.value) + 1e-12);
      }
    }
  }
  const auto g = geometry(100.0, p);
  const auto b1 = make_bspline(1);
  const auto s1 = substituted_integral(100.0, Part::I1, b1, p, 1e-10);
  CHECK(s1.z_lo == g.z1);
  CHECK(std::isinf(s1.z_hi));
  const auto s3 = substituted_integral(100.0, Part::I3, b1, p, 1e-10);
  CHECK(s3.z_lo == g.z2);
  CHECK(s3.z_hi == 100.0);
  CHECK_THROWS_AS(substituted_integral(100.0, Part::I2, b1, p, 1e-10), DomainError);
}

TEST_CASE("h along the right branch tends to 1 uniformly on compact z sets") {
  const AlphaParams p(0.5);
  const double d2 = right_branch_h_deviation(1e2, 5.0, p);
  const double d3 = right_branch_h_deviation(1e3, 5.0, p);
  const double d4 = right_branch_h_deviation(1e4, 5.0, p);
  CHECK(d3 < d2);
  CHECK(d4 < d3);
  CHECK(d3 < 0.1);
  CHECK(d4 < 0.03);
  CHECK(right_branch_h_deviation(1e4, 5.0, p, 201, true) < 0.03);
  CHECK_THROWS_AS(right_branch_h_deviation(4.0, 5.0, p), DomainError);
}

TEST_CASE("sampled symbol is sorted, exportable and thread-count independent") {
  const AlphaParams p(0.5);
  const auto w = make_bspline(1);
  std::vector<double> xis{300.0, -2.0, 0.5, 17.0, 5.0, 1000.0, 0.0, 44.0};
  set_max_threads(1);
  const auto seq = sample_symbol(xis, w, p, 1e-10, true);
  set_max_threads(0);
  const auto par = sample_symbol(xis, w, p, 1e-10, true);
  REQUIRE(seq.xi_values.size() == xis.size());
  CHECK(std::is_sorted(seq.xi_values.begin(), seq.xi_values.end()));
  CHECK(seq.m_values == par.m_values);
  CHECK(seq.quad_err == par.quad_err);
  for (std::size_t i = 0; i < xis.size(); ++i) {
    const auto& a = (*seq.parts)[i];
    const auto& b = (*par.parts)[i];
    for (int k = 0; k < 4; ++k) CHECK((a[k] == b[k] || (std::isnan(a[k]) && std::isnan(b[k]))));
    // parts exist only beyond 2 / alpha
    CHECK(std::isnan(a[0]) == (seq.xi_values[i] <= 4.0));
  }
  for (double m : seq.m_values) CHECK(m > 0.0);

  std::ostringstream os;
  write_symbol_csv(os, par);
  CHECK(os.str().rfind("xi,m,err,part1,part2,part3,part4\n", 0) == 0);
  const auto plain = sample_symbol({1.0, 2.0}, w, p, 1e-10);
  std::ostringstream os2;
  write_symbol_csv(os2, plain);
  CHECK(os2.str().rfind("xi,m,err\n1,", 0) == 0);
}

TEST_CASE("quadrature limits surface as tolerance errors") {
  SymbolOptions opt;
  opt.max_pieces = 4;
  CHECK_THROWS_AS(eval_m(50.0, make_bspline(1), AlphaParams(0.5), 1e-14, opt), ToleranceError);
  CHECK_THROWS_AS(eval_m(50.0, make_bspline(1), AlphaParams(0.5), 0.0), DomainError);
}
