#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "maskbridge/data.hpp"
#include "maskbridge/model.hpp"
#include "maskbridge/tensor.hpp"

namespace maskbridge {

// Discrete noise-to-data schedule for the diffusion baseline: beta_i linear
// over i = 1..T with alpha_bar_i = prod(1 - beta_j), alpha_bar_0 = 1.
struct DiffusionSchedule {
  int T = 1000;
  std::vector<double> beta;       // beta[i] for i = 1..T (index 0 unused)
  std::vector<double> alpha_bar;  // alpha_bar[i] for i = 0..T

  static DiffusionSchedule linear(int T = 1000, double beta_lo = 1e-4, double beta_hi = 2e-2);
};

// z_i = sqrt(alpha_bar_i) * z_tgt + sqrt(1 - alpha_bar_i) * eps, 1 <= i <= T.
Tensor diffusion_forward_sample(const Tensor& z_tgt, int i, const Tensor& eps,
                                const DiffusionSchedule& d);

// MSE between the model's noise prediction and eps, with the same (src, mask)
// conditioning as the bridge path.
double noise_loss(const ModelParams& p, const RemovalTriplet& triplet, int i, const Tensor& eps,
                  const DiffusionSchedule& d);

using NoiseFn = std::function<Tensor(const Tensor& z, int i)>;

// Deterministic DDIM chain from an explicit initial state along the schedule
// indices round(k*T/N); exposed separately so the oracle-inversion check can
// drive it.
Tensor ddim_from(const NoiseFn& eps_model, const Tensor& init, int n_steps,
                 const DiffusionSchedule& d);

// Production path: start from seeded pure Gaussian noise, condition through
// y = (mask, z_src) inside the model closure.
Tensor ddim_sample(const ModelParams& p, const Tensor& z_src, const Tensor& mask, int n_steps,
                   const DiffusionSchedule& d, uint64_t seed);

}  // namespace maskbridge
