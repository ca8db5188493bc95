#include "maskbridge/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "maskbridge/bridge.hpp"
#include "maskbridge/kernels.hpp"
#include "maskbridge/rng.hpp"

namespace maskbridge {

SolverWeights posterior_weights(double t, double t_next, const NoiseSchedule& s) {
  if (!(t_next >= 0.0 && t_next < t && t <= 1.0))
    throw std::invalid_argument("posterior_weights: need 0 <= t_next < t <= 1");
  const double var_t = s.sigma_sq(t);
  const double var_n = s.sigma_sq(t_next);
  SolverWeights w;
  w.w1 = var_n / var_t;
  w.w2 = 1.0 - w.w1;
  w.w3 = std::sqrt(var_n) * std::sqrt(std::max(0.0, 1.0 - w.w1));
  return w;
}

Tensor sde_step(const Tensor& z, const Tensor& z0_hat, double t, double t_next,
                const Tensor& noise, const NoiseSchedule& s) {
  require_same_shape(z, z0_hat, "sde_step");
  require_same_shape(z, noise, "sde_step");
  const SolverWeights w = posterior_weights(t, t_next, s);
  Tensor out(z.dims());
  kernels::active().mix3(out.data(), w.w1, z.data(), w.w2, z0_hat.data(), w.w3, noise.data(),
                         static_cast<size_t>(out.numel()));
  return out;
}

Tensor sample(const VelocityFn& model, const Tensor& z_src, const SamplerConfig& cfg,
              const NoiseSchedule& s) {
  const TimeGrid grid = TimeGrid::uniform(cfg.steps, cfg.t_max);
  Prng rng(cfg.seed, 0x5a3);

  Tensor z = z_src;
  Tensor noise(z.dims());
  for (int k = 0; k < cfg.steps; ++k) {
    const double t = grid.times[static_cast<size_t>(k)];
    const double t_next = grid.times[static_cast<size_t>(k) + 1];
    const double t_eval = std::min(t, cfg.t_clamp);

    Tensor v = model(z, t_eval);
    if (!v.same_shape(z))
      throw std::runtime_error("sample: model output shape mismatch at step " + std::to_string(k));
    Tensor z0_hat = recover_target(z, v, z_src, t_eval, s);

    if (k + 1 == cfg.steps) {
      z = std::move(z0_hat);
    } else {
      SolverWeights w = posterior_weights(t, t_next, s);
      if (!cfg.stochastic) w.w3 = 0.0;
      rng.fill_normal(noise);
      kernels::active().mix3(z.data(), w.w1, z.data(), w.w2, z0_hat.data(), w.w3, noise.data(),
                             static_cast<size_t>(z.numel()));
    }
    if (!z.all_finite())
      throw std::runtime_error("sample: non-finite state at step " + std::to_string(k));
  }
  return z;
}

}  // namespace maskbridge
