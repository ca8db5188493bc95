#include <doctest.h>

#include <cmath>

#include "maskbridge/bridge.hpp"
#include "maskbridge/rng.hpp"

using namespace maskbridge;

namespace {

const NoiseSchedule kSched(0.01, 50.0, true);

Tensor scal(double v) { return Tensor::scalar(v); }

}  // namespace

TEST_CASE("interpolate pins the endpoints and rejects shape mismatches") {
  const Tensor z_tgt = scal(0.0), z_src = scal(1.0), eps = scal(123.0);
  CHECK(interpolate(z_tgt, z_src, 0.0, eps, kSched)[0] == 0.0);
  CHECK(interpolate(z_tgt, z_src, 1.0, eps, kSched)[0] == 1.0);
  // eps = 0 leaves only the b_t weight of the source
  CHECK(interpolate(z_tgt, z_src, 0.5, scal(0.0), kSched)[0] ==
        doctest::Approx(0.2500999800039992).epsilon(1e-13));
  CHECK_THROWS_AS(interpolate(z_tgt, Tensor({2}), 0.5, eps, kSched), std::invalid_argument);
}

TEST_CASE("brownian interpolation: midpoint, pinning, noise scale") {
  CHECK(brownian_interpolate(scal(2.0), scal(4.0), 0.5, scal(0.0))[0] == doctest::Approx(3.0));
  CHECK(brownian_interpolate(scal(2.0), scal(4.0), 0.0, scal(7.0))[0] == doctest::Approx(2.0));
  CHECK(brownian_interpolate(scal(0.0), scal(0.0), 0.5, scal(1.0))[0] == doctest::Approx(0.5));
}

TEST_CASE("brownian bridge equals the VP bridge under constant beta = 1") {
  // beta == 1 gives sigma_t^2 = t with sigma_1^2 = 1: a = 1-t, b = t,
  // c = sqrt(t(1-t)), exactly the constant-coefficient bridge.
  const NoiseSchedule unit(1.0, 1.0, false);
  Prng rng(3, 0xab);
  const Tensor x0 = rng.normal_tensor({2, 4, 4});
  const Tensor x1 = rng.normal_tensor({2, 4, 4});
  const Tensor eps = rng.normal_tensor({2, 4, 4});
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    const Tensor a = brownian_interpolate(x0, x1, t, eps);
    const Tensor b = interpolate(x0, x1, t, eps, unit);
    REQUIRE(max_abs_diff(a, b) <= 1e-12);
  }
}

TEST_CASE("velocity target: boundary, frozen mid value, t->1 limit") {
  const Tensor z_tgt = scal(2.0), eps = scal(1.0);
  CHECK(velocity_target(z_tgt, eps, 0.0, kSched)[0] == 1.0);  // u = eps at t = 0
  CHECK(velocity_target(z_tgt, eps, 0.5, kSched)[0] ==
        doctest::Approx(-0.1342322616416360).epsilon(1e-12));
  // a/rho -> 0 and c/rho -> 1 in normalized mode, so u -> -z_tgt
  CHECK(velocity_target(z_tgt, eps, 1.0 - 1e-6, kSched)[0] == doctest::Approx(-2.0).epsilon(2e-3));
  CHECK_THROWS_AS(velocity_target(z_tgt, eps, 1.0, kSched), std::domain_error);
}

TEST_CASE("analytic score: zero on the mean, -1/c at one sigma, -eps/c identity") {
  Prng rng(5, 0xcd);
  const Tensor z_tgt = rng.normal_tensor({3, 4, 4});
  const Tensor z_src = rng.normal_tensor({3, 4, 4});
  const double t = 0.4;
  const auto k = kSched.coefficients(t);

  Tensor mean(z_tgt.dims());
  for (int64_t i = 0; i < mean.numel(); ++i) mean[i] = k.a * z_tgt[i] + k.b * z_src[i];
  const Tensor s0 = analytic_score(mean, z_tgt, z_src, t, kSched);
  for (int64_t i = 0; i < s0.numel(); ++i) REQUIRE(std::fabs(s0[i]) <= 1e-12);

  Tensor displaced = mean;
  for (int64_t i = 0; i < displaced.numel(); ++i) displaced[i] += k.c;
  const Tensor s1 = analytic_score(displaced, z_tgt, z_src, t, kSched);
  for (int64_t i = 0; i < s1.numel(); ++i)
    REQUIRE(s1[i] == doctest::Approx(-1.0 / k.c).epsilon(1e-11));

  const Tensor eps = rng.normal_tensor(z_tgt.dims());
  const Tensor z_t = interpolate(z_tgt, z_src, t, eps, kSched);
  const Tensor s2 = analytic_score(z_t, z_tgt, z_src, t, kSched);
  for (int64_t i = 0; i < s2.numel(); ++i)
    REQUIRE(s2[i] == doctest::Approx(-eps[i] / k.c).epsilon(1e-9));

  CHECK_THROWS_AS(analytic_score(mean, z_tgt, z_src, 0.0, kSched), std::domain_error);
  CHECK_THROWS_AS(analytic_score(mean, z_tgt, z_src, 1.0, kSched), std::domain_error);
}

TEST_CASE("guidance term: zero at the pin, direct arithmetic, sign") {
  CHECK(guidance_h(scal(1.0), scal(1.0), 0.3, kSched)[0] == 0.0);
  // constant beta = 4: sigma_1^2 = 4 raw, sigma_bar^2(0.5) = 2
  const NoiseSchedule four(4.0, 4.0, false);
  CHECK(guidance_h(scal(0.0), scal(1.0), 0.5, four)[0] == doctest::Approx(0.5).epsilon(1e-14));
  // points from z_t toward z_src componentwise
  Prng rng(9, 0x11);
  const Tensor z_t = rng.normal_tensor({8});
  const Tensor z_src = rng.normal_tensor({8});
  const Tensor h = guidance_h(z_t, z_src, 0.7, kSched);
  for (int64_t i = 0; i < h.numel(); ++i)
    REQUIRE(h[i] * (z_src[i] - z_t[i]) >= 0.0);
  CHECK_THROWS_AS(guidance_h(z_t, z_src, 1.0, kSched), std::domain_error);
}

TEST_CASE("recover_target inverts interpolate + velocity_target exactly") {
  Prng rng(7, 0x77);
  const Tensor z_tgt = rng.normal_tensor({2, 6, 6});
  const Tensor z_src = rng.normal_tensor({2, 6, 6});
  for (int i = 1; i <= 99; ++i) {
    const double t = i / 100.0;
    const Tensor eps = Prng(8, static_cast<uint64_t>(i)).normal_tensor(z_tgt.dims());
    const Tensor z_t = interpolate(z_tgt, z_src, t, eps, kSched);
    const Tensor u = velocity_target(z_tgt, eps, t, kSched);
    const Tensor rec = recover_target(z_t, u, z_src, t, kSched);
    REQUIRE(max_abs_diff(rec, z_tgt) <= 1e-9);
  }
  CHECK_THROWS_AS(recover_target(z_tgt, z_tgt, z_src, 0.0, kSched), std::domain_error);
  CHECK_THROWS_AS(recover_target(z_tgt, z_tgt, z_src, 1.0, kSched), std::domain_error);
}

TEST_CASE("recover_target: zero-velocity cases and the rho^2 = a identity") {
  const double t = 0.5;
  const auto k = kSched.coefficients(t);
  // z_tgt = 0, eps = 0 so z_t = b*z_src; zero velocity recovers zero
  const Tensor z_t = scal(k.b * 1.5);
  CHECK(recover_target(z_t, scal(0.0), scal(1.5), t, kSched)[0] == doctest::Approx(0.0).epsilon(1e-12));
  // normalized mode: a/rho^2 = 1 exactly, so (z_t=1, z_src=0, v=0) -> 1
  CHECK(recover_target(scal(1.0), scal(0.0), scal(0.0), t, kSched)[0] ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("recover_target is sensitive to a flipped c_t sign") {
  // sensitivity demonstration: the round trip breaks if c's sign is wrong
  const double t = 0.5;
  const auto k = kSched.coefficients(t);
  Prng rng(31, 0x44);
  const Tensor z_tgt = rng.normal_tensor({16});
  const Tensor z_src = rng.normal_tensor({16});
  const Tensor eps = rng.normal_tensor({16});
  const Tensor z_t = interpolate(z_tgt, z_src, t, eps, kSched);
  const Tensor u = velocity_target(z_tgt, eps, t, kSched);
  Tensor bad(z_t.dims());
  const double rho_sq = k.rho * k.rho;
  for (int64_t i = 0; i < bad.numel(); ++i)
    bad[i] = (k.a / rho_sq) * z_t[i] - (k.a * k.b / rho_sq) * z_src[i] + (k.c / k.rho) * u[i];
  CHECK(max_abs_diff(bad, z_tgt) > 0.1);
}

TEST_CASE("forward bridge simulation: determinism and symmetric pin") {
  const Tensor c = scal(0.75);
  const auto t1 = simulate_forward_bridge(c, c, 50, kSched, 42);
  const auto t2 = simulate_forward_bridge(c, c, 50, kSched, 42);
  REQUIRE(t1.size() == t2.size());
  for (size_t i = 0; i < t1.size(); ++i) REQUIRE(t1[i].z[0] == t2[i].z[0]);
  CHECK(t1.front().t == 0.0);
  CHECK(t1.back().t == 1.0);

  // equal endpoints: mean terminal displacement is zero within 3 SE
  const int paths = 400;
  double sum = 0.0, sum_sq = 0.0;
  for (int p = 0; p < paths; ++p) {
    const double zf = simulate_forward_bridge(c, c, 50, kSched, 100 + p).back().z[0] - 0.75;
    sum += zf;
    sum_sq += zf * zf;
  }
  const double mean = sum / paths;
  const double se = std::sqrt((sum_sq / paths - mean * mean) / paths);
  CHECK(std::fabs(mean) <= 3.0 * se + 1e-12);

  CHECK_THROWS_AS(simulate_forward_bridge(c, c, 5, kSched, 0), std::invalid_argument);
}

TEST_CASE("forward bridge simulation: marginal statistics and pin refinement") {
  const double z_tgt = -0.7, z_src = 1.3;
  const Tensor t0 = scal(z_tgt), t1 = scal(z_src);
  const int paths = 20000, steps = 200;
  double sum = 0.0, sum_sq = 0.0;
  for (int p = 0; p < paths; ++p) {
    const auto traj = simulate_forward_bridge(t0, t1, steps, kSched, 500 + p);
    const double v = traj[steps / 2].z[0];  // t = 0.5
    sum += v;
    sum_sq += v * v;
  }
  const auto k = kSched.coefficients(0.5);
  const double mu = k.a * z_tgt + k.b * z_src;
  const double mean = sum / paths;
  const double var = sum_sq / paths - mean * mean;
  const double se = std::sqrt(var / paths);
  CHECK(std::fabs(mean - mu) <= 4.0 * se);
  CHECK(std::fabs(std::sqrt(var) - k.c) <= 0.10 * k.c);

  // terminal pin error shrinks as the step count doubles
  auto pin_err = [&](int n) {
    double acc = 0.0;
    for (int p = 0; p < 400; ++p)
      acc += std::fabs(simulate_forward_bridge(t0, t1, n, kSched, 900 + p).back().z[0] - z_src);
    return acc / 400;
  };
  CHECK(pin_err(100) < pin_err(50));
}
