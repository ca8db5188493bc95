#include "maskbridge/baseline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "maskbridge/kernels.hpp"
#include "maskbridge/rng.hpp"

namespace maskbridge {

DiffusionSchedule DiffusionSchedule::linear(int T, double beta_lo, double beta_hi) {
  if (T < 1) throw std::invalid_argument("diffusion schedule: T must be >= 1");
  DiffusionSchedule d;
  d.T = T;
  d.beta.resize(static_cast<size_t>(T) + 1, 0.0);
  d.alpha_bar.resize(static_cast<size_t>(T) + 1, 1.0);
  for (int i = 1; i <= T; ++i) {
    const double b =
        (T == 1) ? beta_lo : beta_lo + (beta_hi - beta_lo) * static_cast<double>(i - 1) / (T - 1);
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("diffusion schedule: beta outside (0,1)");
    d.beta[static_cast<size_t>(i)] = b;
    d.alpha_bar[static_cast<size_t>(i)] = d.alpha_bar[static_cast<size_t>(i) - 1] * (1.0 - b);
  }
  return d;
}

namespace {
void check_step(int i, const DiffusionSchedule& d, const char* what) {
  if (i < 1 || i > d.T) throw std::out_of_range(std::string(what) + ": step outside [1,T]");
}
}  // namespace

Tensor diffusion_forward_sample(const Tensor& z_tgt, int i, const Tensor& eps,
                                const DiffusionSchedule& d) {
  check_step(i, d, "diffusion_forward_sample");
  require_same_shape(z_tgt, eps, "diffusion_forward_sample");
  const double ab = d.alpha_bar[static_cast<size_t>(i)];
  Tensor out(z_tgt.dims());
  kernels::active().mix2(out.data(), std::sqrt(ab), z_tgt.data(), std::sqrt(1.0 - ab), eps.data(),
                         static_cast<size_t>(out.numel()));
  return out;
}

double noise_loss(const ModelParams& p, const RemovalTriplet& triplet, int i, const Tensor& eps,
                  const DiffusionSchedule& d) {
  check_step(i, d, "noise_loss");
  Tensor z_i = diffusion_forward_sample(triplet.target, i, eps, d);
  TrainSample smp;
  smp.slot = 0;
  smp.z_in = std::move(z_i);
  smp.t_net = static_cast<double>(i) / d.T;
  smp.cond_src = &triplet.source;
  smp.cond_mask = &triplet.mask;
  smp.target = eps;
  return batch_loss(p, std::span<const TrainSample>(&smp, 1));
}

Tensor ddim_from(const NoiseFn& eps_model, const Tensor& init, int n_steps,
                 const DiffusionSchedule& d) {
  if (n_steps < 1 || n_steps > d.T)
    throw std::invalid_argument("ddim: need 1 <= steps <= T");
  auto index_at = [&](int k) {
    return static_cast<int>(std::lround(static_cast<double>(k) * d.T / n_steps));
  };

  Tensor z = init;
  for (int k = n_steps; k >= 1; --k) {
    const int i = index_at(k);
    const int i_prev = index_at(k - 1);
    const double ab = d.alpha_bar[static_cast<size_t>(i)];

    Tensor eps_hat = eps_model(z, i);
    if (!eps_hat.same_shape(z))
      throw std::runtime_error("ddim: model output shape mismatch at step " + std::to_string(k));

    // z0_hat = (z - sqrt(1-ab)*eps_hat)/sqrt(ab)
    Tensor z0_hat(z.dims());
    kernels::active().mix2(z0_hat.data(), 1.0 / std::sqrt(ab), z.data(),
                           -std::sqrt(1.0 - ab) / std::sqrt(ab), eps_hat.data(),
                           static_cast<size_t>(z.numel()));
    if (k > 1) {
      const double abp = d.alpha_bar[static_cast<size_t>(i_prev)];
      kernels::active().mix2(z.data(), std::sqrt(abp), z0_hat.data(), std::sqrt(1.0 - abp),
                             eps_hat.data(), static_cast<size_t>(z.numel()));
    } else {
      z = std::move(z0_hat);
    }
    if (!z.all_finite())
      throw std::runtime_error("ddim: non-finite state at step " + std::to_string(k));
  }
  return z;
}

Tensor ddim_sample(const ModelParams& p, const Tensor& z_src, const Tensor& mask, int n_steps,
                   const DiffusionSchedule& d, uint64_t seed) {
  Prng rng(seed, 0xdd1);
  Tensor init = rng.normal_tensor(z_src.dims());
  NoiseFn model = [&](const Tensor& z, int i) {
    return forward(p, z, static_cast<double>(i) / d.T, z_src, mask);
  };
  return ddim_from(model, init, n_steps, d);
}

}  // namespace maskbridge
