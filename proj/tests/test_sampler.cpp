#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "maskbridge/bridge.hpp"
#include "maskbridge/rng.hpp"
#include "maskbridge/sampler.hpp"

using namespace maskbridge;

namespace {

const NoiseSchedule kSched(0.01, 50.0, true);

VelocityFn exact_oracle(const Tensor& z_tgt, const Tensor& z_src) {
  return [&z_tgt, &z_src](const Tensor& z, double t) {
    const auto k = kSched.coefficients(t);
    Tensor eps(z.dims());
    for (int64_t i = 0; i < z.numel(); ++i)
      eps[i] = (z[i] - k.a * z_tgt[i] - k.b * z_src[i]) / k.c;
    return velocity_target(z_tgt, eps, t, kSched);
  };
}

}  // namespace

TEST_CASE("posterior weights: limits, invariants, argument checks") {
  const auto w_final = posterior_weights(0.3, 0.0, kSched);
  CHECK(w_final.w1 == 0.0);
  CHECK(w_final.w2 == 1.0);
  CHECK(w_final.w3 == 0.0);

  const auto w_null = posterior_weights(0.5, 0.5 - 1e-13, kSched);
  CHECK(w_null.w1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(w_null.w2 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::fabs(w_null.w3) < 1e-4);

  Prng rng(1, 0x99);
  for (int i = 0; i < 200; ++i) {
    double t = 0.01 + 0.99 * rng.uniform();
    double tn = rng.uniform() * t * 0.999;
    const auto w = posterior_weights(t, tn, kSched);
    REQUIRE(w.w1 + w.w2 == 1.0);  // w2 defined as 1 - w1
    REQUIRE(w.w1 >= 0.0);
    REQUIRE(w.w1 <= 1.0);
    REQUIRE(w.w3 >= 0.0);
  }

  CHECK_THROWS_AS(posterior_weights(0.5, 0.5, kSched), std::invalid_argument);
  CHECK_THROWS_AS(posterior_weights(0.5, 0.7, kSched), std::invalid_argument);
}

TEST_CASE("posterior weights: chain composition reproduces the marginal exactly") {
  // coefficient recursion over a 50-node grid, compared to (a, b, c^2)
  const TimeGrid grid = TimeGrid::uniform(50, 1.0);
  double c0 = 0.0, c1 = 1.0, var = 0.0;
  for (size_t k = 0; k + 1 < grid.times.size(); ++k) {
    const auto w = posterior_weights(grid.times[k], grid.times[k + 1], kSched);
    c0 = w.w1 * c0 + w.w2;
    c1 = w.w1 * c1;
    var = w.w1 * w.w1 * var + w.w3 * w.w3;
    const auto co = kSched.coefficients(grid.times[k + 1]);
    REQUIRE(std::fabs(c0 - co.a) <= 1e-12);
    REQUIRE(std::fabs(c1 - co.b) <= 1e-12);
    REQUIRE(std::fabs(var - co.c * co.c) <= 1e-12);
  }
}

TEST_CASE("posterior weights: Monte-Carlo composition matches mean and variance") {
  // before trusting the formulas: inject z0_hat = z_tgt and compare the chain
  // against the closed-form marginal at every grid node
  const double z_tgt = 0.9, z_src = -0.4;
  const TimeGrid grid = TimeGrid::uniform(10, 1.0);
  const int runs = 100000;
  std::vector<double> sum(grid.times.size(), 0.0), sum_sq(grid.times.size(), 0.0);
  for (int r = 0; r < runs; ++r) {
    Prng rng(7000 + r, 0x3c);
    double z = z_src;
    for (size_t k = 0; k + 1 < grid.times.size(); ++k) {
      const auto w = posterior_weights(grid.times[k], grid.times[k + 1], kSched);
      z = w.w1 * z + w.w2 * z_tgt + w.w3 * rng.normal();
      sum[k + 1] += z;
      sum_sq[k + 1] += z * z;
    }
  }
  for (size_t k = 1; k + 1 < grid.times.size(); ++k) {
    const auto co = kSched.coefficients(grid.times[k]);
    const double mu = co.a * z_tgt + co.b * z_src;
    const double mean = sum[k] / runs;
    const double var = sum_sq[k] / runs - mean * mean;
    const double se = std::sqrt(var / runs);
    REQUIRE(std::fabs(mean - mu) <= 4.0 * se);
    REQUIRE(std::fabs(var - co.c * co.c) <= 0.10 * co.c * co.c);
  }
  // final node collapses to z0_hat exactly
  CHECK(sum.back() / runs == doctest::Approx(z_tgt).epsilon(1e-12));
}

TEST_CASE("sde_step: final collapse, fixed point, mid-step spot check") {
  Prng rng(3, 0x71);
  const Tensor z = rng.normal_tensor({2, 3, 3});
  const Tensor z0 = rng.normal_tensor({2, 3, 3});
  const Tensor noise = rng.normal_tensor({2, 3, 3});

  const Tensor final_state = sde_step(z, z0, 0.4, 0.0, noise, kSched);
  REQUIRE(max_abs_diff(final_state, z0) == 0.0);

  const Tensor zero_noise = Tensor({2, 3, 3});
  const Tensor fixed = sde_step(z0, z0, 0.5, 0.25, zero_noise, kSched);
  REQUIRE(max_abs_diff(fixed, z0) <= 1e-14);

  // spot check against the definition at (t, t') = (0.5, 0.25)
  const double v_t = kSched.sigma_sq(0.5), v_n = kSched.sigma_sq(0.25);
  const double w1 = v_n / v_t, w2 = 1.0 - w1, w3 = std::sqrt(v_n) * std::sqrt(1.0 - w1);
  const Tensor stepped = sde_step(z, z0, 0.5, 0.25, noise, kSched);
  for (int64_t i = 0; i < stepped.numel(); ++i)
    REQUIRE(stepped[i] ==
            doctest::Approx(w1 * z[i] + w2 * z0[i] + w3 * noise[i]).epsilon(1e-13));
  // the step's variance bookkeeping is exactly marginal-consistent
  const auto ct = kSched.coefficients(0.5), cn = kSched.coefficients(0.25);
  REQUIRE(std::fabs(w1 * w1 * ct.c * ct.c + w3 * w3 - cn.c * cn.c) <= 1e-12);

  CHECK_THROWS_AS(sde_step(z, z0, 0.5, 0.25, Tensor({3}), kSched), std::invalid_argument);
}

TEST_CASE("sample with the exact-velocity oracle recovers the target") {
  Prng rng(11, 0x2f);
  const Tensor z_tgt = rng.normal_tensor({2, 5, 5});
  const Tensor z_src = rng.normal_tensor({2, 5, 5});
  SamplerConfig cfg;
  cfg.steps = 50;
  cfg.stochastic = false;
  const Tensor out = sample(exact_oracle(z_tgt, z_src), z_src, cfg, kSched);
  REQUIRE(max_abs_diff(out, z_tgt) <= 1e-6);
}

TEST_CASE("sample at N=1 is the single-shot recovery at the clamped time") {
  Prng rng(13, 0x30);
  const Tensor z_tgt = rng.normal_tensor({2, 4, 4});
  const Tensor z_src = rng.normal_tensor({2, 4, 4});
  SamplerConfig cfg;
  cfg.steps = 1;
  const auto model = exact_oracle(z_tgt, z_src);
  const Tensor out = sample(model, z_src, cfg, kSched);
  const Tensor v = model(z_src, cfg.t_clamp);
  const Tensor expect = recover_target(z_src, v, z_src, cfg.t_clamp, kSched);
  REQUIRE(max_abs_diff(out, expect) == 0.0);
}

TEST_CASE("sample error is non-increasing in the step count (oracle velocities)") {
  Prng rng(17, 0x31);
  const Tensor z_tgt = rng.normal_tensor({2, 4, 4});
  const Tensor z_src = rng.normal_tensor({2, 4, 4});
  double prev = -1.0;
  for (int n : {1, 5, 10, 25, 50}) {
    SamplerConfig cfg;
    cfg.steps = n;
    cfg.stochastic = false;
    const double err = max_abs_diff(sample(exact_oracle(z_tgt, z_src), z_src, cfg, kSched), z_tgt);
    if (prev >= 0.0) REQUIRE(err <= prev + 1e-9);
    prev = err;
  }
}

TEST_CASE("sample is bitwise deterministic under a fixed seed") {
  Prng rng(19, 0x32);
  const Tensor z_tgt = rng.normal_tensor({2, 4, 4});
  const Tensor z_src = rng.normal_tensor({2, 4, 4});
  SamplerConfig cfg;
  cfg.steps = 20;
  cfg.stochastic = true;
  cfg.seed = 777;
  const auto model = exact_oracle(z_tgt, z_src);
  const Tensor a = sample(model, z_src, cfg, kSched);
  const Tensor b = sample(model, z_src, cfg, kSched);
  REQUIRE(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("sample fails fast with the step index on bad model output") {
  const Tensor z_src = Tensor::full({2, 3, 3}, 0.5);
  SamplerConfig cfg;
  cfg.steps = 4;

  const VelocityFn bad_shape = [](const Tensor&, double) { return Tensor({5}); };
  try {
    sample(bad_shape, z_src, cfg, kSched);
    FAIL("expected a runtime error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("shape mismatch at step 0") != std::string::npos);
  }

  const VelocityFn nan_model = [](const Tensor& z, double) {
    Tensor v(z.dims());
    v.fill(std::numeric_limits<double>::quiet_NaN());
    return v;
  };
  try {
    sample(nan_model, z_src, cfg, kSched);
    FAIL("expected a runtime error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
}
