#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "amod/group.hpp"

using namespace amod;
using Catch::Matchers::WithinAbs;

namespace {

void require_close(const GroupElement& g, const GroupElement& h, double tol = 1e-12) {
  CHECK_THAT(g.x, WithinAbs(h.x, tol));
  CHECK_THAT(g.omega, WithinAbs(h.omega, tol));
  CHECK_THAT(g.a, WithinAbs(h.a, tol));
  CHECK_THAT(g.tau, WithinAbs(h.tau, tol));
}

GroupElement random_element(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> s(-1.5, 1.5);
  return {u(rng), u(rng), std::exp(s(rng)), u(rng)};
}

double rel_diff(const GroupElement& g, const GroupElement& h) {
  double d = 0.0;
  for (auto [a, b] : {std::pair{g.x, h.x}, {g.omega, h.omega}, {g.a, h.a}, {g.tau, h.tau}})
    d = std::max(d, std::abs(a - b) / std::max(1.0, std::abs(a)));
  return d;
}

SampledSignal gaussian_signal(std::size_t n = 512, double dt = 1.0 / 16.0, double width = 1.0) {
  return SampledSignal::sample(
      [&](double t) { return std::pow(2.0 / (width * width), 0.25) * std::exp(-kPi * t * t / (width * width)); },
      -0.5 * dt * static_cast<double>(n), dt, n);
}

}  // namespace

TEST_CASE("composition law on worked elements") {
  require_close(compose(GroupElement::identity(), {1, 2, 3, 4}), {1, 2, 3, 4});
  require_close(compose({1, 1, 2, 0}, {1, 0, 1, 0}), {3, 1, 2, 2});
  require_close(compose({1, 2, 3, 4}, GroupElement::identity()), {1, 2, 3, 4});
}

TEST_CASE("inverse on worked elements") {
  require_close(inverse(GroupElement::identity()), GroupElement::identity());
  require_close(inverse({2, 3, 4, 5}), {-0.5, -12, 0.25, 1});
}

TEST_CASE("scale must be positive") {
  CHECK_THROWS_AS(GroupElement(0, 0, 0.0, 0), DomainError);
  CHECK_THROWS_AS(GroupElement(0, 0, -1.0, 0), DomainError);
}

TEST_CASE("inverse axioms for random elements") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto g = random_element(rng);
    CHECK(rel_diff(compose(g, inverse(g)), GroupElement::identity()) < 1e-12);
    CHECK(rel_diff(compose(inverse(g), g), GroupElement::identity()) < 1e-12);
  }
}

TEST_CASE("associativity over 1000 random triples") {
  std::mt19937_64 rng(12);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto g = random_element(rng), h = random_element(rng), k = random_element(rng);
    worst = std::max(worst, rel_diff(compose(compose(g, h), k), compose(g, compose(h, k))));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("left and right translates of a test function integrate alike") {
  // F is a Gaussian in (x, omega, log a, tau), below 1e-16 outside the box;
  // the measure is dx domega da/a dtau, i.e. Lebesgue measure in log a.
  auto F = [](const GroupElement& g) {
    const double s = std::log(g.a);
    return std::exp(-(g.x * g.x + g.omega * g.omega + 2.0 * s * s + g.tau * g.tau));
  };
  const int n = 48;
  const double box = 8.0, sbox = 5.0;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int trial = 0; trial < 3; ++trial) {
    const GroupElement g{u(rng), u(rng), std::exp(u(rng)), u(rng)};
    double left = 0.0, right = 0.0;
    const double hx = 2 * box / n, hs = 2 * sbox / n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const GroupElement h{-box + (i + 0.5) * hx, -box + (j + 0.5) * hx, std::exp(-sbox + (k + 0.5) * hs),
                                 -box + (l + 0.5) * hx};
            left += F(compose(g, h));
            right += F(compose(h, g));
          }
    const double cell = hx * hx * hx * hs;
    left *= cell;
    right *= cell;
    INFO("left " << left << " right " << right);
    CHECK(left > 0.0);
    CHECK(std::abs(left - right) < 1e-6 * left);
  }
}

TEST_CASE("apply_pi: identity and pure phase") {
  const auto f = gaussian_signal();
  const auto g = apply_pi(GroupElement::identity(), f);
  CHECK(g.samples == f.samples);
  const auto p = apply_pi({0, 0, 1, 0.3}, f);
  const cplx ph = std::polar(1.0, 2.0 * kPi * 0.3);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(p.samples[i] - ph * f.samples[i]) < 1e-15);
}

TEST_CASE("apply_pi matches closed-form Gaussian images and preserves energy") {
  const auto f = gaussian_signal();
  for (const GroupElement g : {GroupElement{0.5, 1.5, 1.3, 0.2}, GroupElement{-1.25, -2.0, 0.7, 0.0},
                               GroupElement{0.03, 0.4, 2.0, 0.9}}) {
    const auto img = apply_pi(g, f);
    CHECK_THAT(img.energy(), WithinAbs(f.energy(), 1e-6));
    // e^{2 pi i tau} e^{2 pi i w (t - x)} a^{-1/2} psi((t - x)/a)
    const auto ref = SampledSignal::sample(
        [&](double t) {
          const double u = (t - g.x) / g.a;
          return std::polar(1.0, 2.0 * kPi * (g.tau + g.omega * (t - g.x))) * std::pow(2.0, 0.25) *
                 std::exp(-kPi * u * u) / std::sqrt(g.a);
        },
        f.t0, f.dt, f.size());
    CHECK(l2_distance(img, ref) < 1e-8);
  }
}

TEST_CASE("apply_pi is a homomorphism on well-resolved Gaussians") {
  const auto f = gaussian_signal();
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const GroupElement g{u(rng), 1.5 * u(rng), std::exp(0.3 * u(rng)), u(rng)};
    const GroupElement h{u(rng), 1.5 * u(rng), std::exp(0.3 * u(rng)), u(rng)};
    const auto lhs = apply_pi(compose(g, h), f);
    const auto rhs = apply_pi(g, apply_pi(h, f));
    CHECK(l2_distance(lhs, rhs) < 1e-6);
  }
}

TEST_CASE("grid-aligned translation is an exact circular shift") {
  const auto f = gaussian_signal(64, 0.25);
  const auto g = apply_pi({0.5, 0, 1, 0}, f);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(g.samples[(i + 2) % f.size()] == f.samples[i]);
}

TEST_CASE("apply_pi refuses under-resolved results") {
  const auto f = gaussian_signal(128, 0.25);
  // shrinking pushes the spectrum past Nyquist
  CHECK_THROWS_AS(apply_pi({0, 0, 0.05, 0}, f), UnderresolutionError);
  // stretching wraps the support around the periodic grid
  CHECK_THROWS_AS(apply_pi({0, 0, 20.0, 0}, f), UnderresolutionError);
  // modulating beyond the band
  CHECK_THROWS_AS(apply_pi({0, 1.9, 1, 0}, f), UnderresolutionError);
}

TEST_CASE("signal CSV round trip") {
  const auto f = apply_pi({0.3, 1.0, 1.0, 0.1}, gaussian_signal(64, 0.125));
  std::stringstream ss;
  write_signal_csv(ss, f);
  CHECK(ss.str().rfind("t,re,im\n", 0) == 0);
  const auto g = read_signal_csv(ss);
  REQUIRE(g.size() == f.size());
  CHECK(g.samples == f.samples);
  CHECK(g.t0 == f.t0);
  CHECK_THAT(g.dt, WithinAbs(f.dt, 1e-15));
}

TEST_CASE("signal CSV rejects malformed input") {
  std::stringstream bad_header("time,re,im\n0,1,0\n");
  CHECK_THROWS_AS(read_signal_csv(bad_header), Error);
  std::stringstream uneven("t,re,im\n0,1,0\n1,1,0\n3,1,0\n");
  CHECK_THROWS_AS(read_signal_csv(uneven), Error);
  std::stringstream junk("t,re,im\n0,x,0\n");
  CHECK_THROWS_AS(read_signal_csv(junk), Error);
}
