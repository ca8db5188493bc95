#pragma once

#include <cstdint>
#include <functional>

#include "maskbridge/schedule.hpp"
#include "maskbridge/tensor.hpp"

namespace maskbridge {

// Gaussian posterior step weights for t -> t_next given the predicted target:
// w1 = sigma_{t'}^2 / sigma_t^2, w2 = 1 - w1, w3 = sigma_{t'} * sqrt(1 - w1).
// Composing these steps reproduces the closed-form marginal (a_t, b_t, c_t)
// at every grid node; validated algebraically and by Monte Carlo in the tests.
struct SolverWeights {
  double w1;  // weight of the current state
  double w2;  // weight of the predicted target
  double w3;  // injected-noise std
};

SolverWeights posterior_weights(double t, double t_next, const NoiseSchedule& s);

Tensor sde_step(const Tensor& z, const Tensor& z0_hat, double t, double t_next,
                const Tensor& noise, const NoiseSchedule& s);

struct SamplerConfig {
  int steps = 50;
  double t_max = 1.0;
  double t_clamp = 0.9999;  // velocity/recovery evaluation time cap (rho > 0)
  bool stochastic = true;   // false drops the w3 noise term (debug mode)
  uint64_t seed = 0;
};

// Velocity oracle: conditioning (source, mask) is bound into the callable.
using VelocityFn = std::function<Tensor(const Tensor& z, double t)>;

// Reverse generation from z_src: predict velocity, invert to z0_hat, take a
// posterior step; the final step assigns z0_hat directly.
Tensor sample(const VelocityFn& model, const Tensor& z_src, const SamplerConfig& cfg,
              const NoiseSchedule& s);

}  // namespace maskbridge
