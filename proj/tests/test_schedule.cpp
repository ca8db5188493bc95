#include <doctest.h>

#include <cmath>

#include "maskbridge/schedule.hpp"

using namespace maskbridge;

namespace {

const NoiseSchedule kDefault(0.01, 50.0, true);
const NoiseSchedule kRaw(0.01, 50.0, false);

// Composite-Simpson quadrature of beta over [0, t]; the independent oracle
// for the closed-form cumulative variance.
double sigma_sq_quadrature(const NoiseSchedule& s, double t, int intervals = 20000) {
  double acc = 0.0;
  const double h = t / intervals;
  for (int i = 0; i < intervals; ++i) {
    const double a = i * h, b = a + h;
    acc += (h / 6.0) * (s.beta(a) + 4.0 * s.beta(0.5 * (a + b)) + s.beta(b));
  }
  return acc;
}

}  // namespace

TEST_CASE("beta is the linear rate between beta_min and beta_max") {
  CHECK(kDefault.beta(0.0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(kDefault.beta(1.0) == doctest::Approx(50.0).epsilon(1e-15));
  CHECK(kDefault.beta(0.5) == doctest::Approx(25.005).epsilon(1e-15));
  CHECK_THROWS_AS(kDefault.beta(-0.001), std::domain_error);
  CHECK_THROWS_AS(kDefault.beta(1.001), std::domain_error);
}

TEST_CASE("schedule construction validates its parameters") {
  CHECK_THROWS_AS(NoiseSchedule(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule(2.0, 1.0), std::invalid_argument);
  CHECK_NOTHROW(NoiseSchedule(1.0, 1.0));  // constant beta is allowed
}

TEST_CASE("cumulative variance matches quadrature of beta") {
  CHECK(kRaw.sigma_sq(0.0) == 0.0);
  CHECK(kRaw.sigma_sq(1.0) == doctest::Approx(25.005).epsilon(1e-14));
  CHECK(kRaw.sigma_sq(1.0) == doctest::Approx(sigma_sq_quadrature(kRaw, 1.0)).epsilon(1e-12));
  for (int i = 1; i <= 20; ++i) {
    const double t = i / 20.0;
    CHECK(kRaw.sigma_sq(t) == doctest::Approx(sigma_sq_quadrature(kRaw, t)).epsilon(1e-12));
  }
  // normalized mode divides by sigma_1^2 = 25.005
  const double expect_half = sigma_sq_quadrature(kRaw, 0.5) / sigma_sq_quadrature(kRaw, 1.0);
  CHECK(expect_half == doctest::Approx(0.2500999800039992).epsilon(1e-13));
  CHECK(kDefault.sigma_sq(0.5) == doctest::Approx(expect_half).epsilon(1e-12));
  CHECK(kDefault.sigma_sq(1.0) == 1.0);
}

TEST_CASE("sigma^2 increases strictly in t") {
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = kDefault.sigma_sq(i / 1000.0);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("bridge coefficients: boundaries exact, identities to 1e-12") {
  for (const NoiseSchedule* s : {&kDefault, &kRaw}) {
    const auto k0 = s->coefficients(0.0);
    CHECK(k0.a == 1.0);
    CHECK(k0.b == 0.0);
    CHECK(k0.c == 0.0);
    CHECK(k0.rho == 1.0);
    const auto k1 = s->coefficients(1.0);
    CHECK(k1.a == 0.0);
    CHECK(k1.b == 1.0);
    CHECK(k1.c == 0.0);
    CHECK(k1.rho == 0.0);

    const double s1 = s->sigma1_sq();
    for (int i = 0; i <= 1000; ++i) {
      const auto k = s->coefficients(i / 1000.0);
      REQUIRE(std::fabs(k.a + k.b - 1.0) <= 1e-12);
      REQUIRE(std::fabs(k.c * k.c - k.a * k.b * s1) <= 1e-12 * s1);
      if (s->normalized()) REQUIRE(std::fabs(k.rho * k.rho - k.a) <= 1e-12);
    }
  }
}

TEST_CASE("bridge coefficients at t=0.5, normalized (frozen oracle values)") {
  const auto k = kDefault.coefficients(0.5);
  CHECK(k.a == doctest::Approx(0.7499000199960008).epsilon(1e-13));
  CHECK(k.b == doctest::Approx(0.2500999800039992).epsilon(1e-13));
  CHECK(k.c == doctest::Approx(0.4330704099866423).epsilon(1e-13));
  CHECK(k.rho == doctest::Approx(0.8659676783783566).epsilon(1e-13));
}

TEST_CASE("coefficients are continuous along the grid") {
  auto prev = kDefault.coefficients(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const auto k = kDefault.coefficients(i / 1000.0);
    CHECK(std::fabs(k.a - prev.a) < 5e-3);
    CHECK(std::fabs(k.b - prev.b) < 5e-3);
    CHECK(std::fabs(k.c - prev.c) < 5e-2);
    prev = k;
  }
}

TEST_CASE("general DDBM coefficients reduce to the driftless forms") {
  for (const NoiseSchedule* s : {&kDefault, &kRaw}) {
    const double sig1 = std::sqrt(s->sigma1_sq());
    for (int i = 0; i <= 1000; ++i) {
      const double t = i / 1000.0;
      const auto k = s->coefficients(t);
      const auto g = general_coefficients(1.0, s->sigma(t), 1.0, sig1);
      REQUIRE(std::fabs(g.A - k.a) <= 1e-12);
      REQUIRE(std::fabs(g.B - k.b) <= 1e-12);
      REQUIRE(std::fabs(g.C - k.c) <= 1e-12);
    }
  }
}

TEST_CASE("general DDBM coefficients: endpoint and small-terminal-SNR limits") {
  // t = T: same (alpha, sigma) at both arguments pins to the prior
  const auto end = general_coefficients(0.8, 1.7, 0.8, 1.7);
  CHECK(end.A == 0.0);
  CHECK(end.B == 1.0);
  CHECK(end.C == 0.0);

  // SNR_T -> 0 recovers the plain diffusion marginal (A, B, C) -> (alpha_t, 0, sigma_t)
  const auto g = general_coefficients(0.9, 0.5, 1e-9, 10.0);
  CHECK(g.A == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(std::fabs(g.B) < 1e-9);
  CHECK(g.C == doctest::Approx(0.5).epsilon(1e-9));

  // the bridge must run backward in SNR
  CHECK_THROWS_AS(general_coefficients(1.0, 2.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(general_coefficients(1.0, 1.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("time grid: uniform descending, last entry exactly zero") {
  const auto g1 = TimeGrid::uniform(1, 1.0);
  REQUIRE(g1.times.size() == 2);
  CHECK(g1.times[0] == 1.0);
  CHECK(g1.times[1] == 0.0);

  const auto g4 = TimeGrid::uniform(4, 1.0);
  const double expect[] = {1.0, 0.75, 0.5, 0.25, 0.0};
  REQUIRE(g4.times.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(g4.times[static_cast<size_t>(i)] == doctest::Approx(expect[i]).epsilon(1e-15));

  const auto g2 = TimeGrid::uniform(2, 0.9999);
  CHECK(g2.times[0] == doctest::Approx(0.9999).epsilon(1e-15));
  CHECK(g2.times[1] == doctest::Approx(0.49995).epsilon(1e-15));
  CHECK(g2.times[2] == 0.0);

  for (size_t i = 1; i < g4.times.size(); ++i) CHECK(g4.times[i] < g4.times[i - 1]);

  CHECK_THROWS_AS(TimeGrid::uniform(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid::uniform(10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid::uniform(10, 1.5), std::invalid_argument);
}
