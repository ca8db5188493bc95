#include "maskbridge/bridge.hpp"

#include <cmath>
#include <stdexcept>

#include "maskbridge/kernels.hpp"
#include "maskbridge/rng.hpp"

namespace maskbridge {

Tensor interpolate(const Tensor& z_tgt, const Tensor& z_src, double t, const Tensor& eps,
                   const NoiseSchedule& s) {
  require_same_shape(z_tgt, z_src, "interpolate");
  require_same_shape(z_tgt, eps, "interpolate");
  const BridgeCoefficients k = s.coefficients(t);
  Tensor out(z_tgt.dims());
  kernels::active().mix3(out.data(), k.a, z_tgt.data(), k.b, z_src.data(), k.c, eps.data(),
                         static_cast<size_t>(out.numel()));
  return out;
}

Tensor brownian_interpolate(const Tensor& x0, const Tensor& x1, double t, const Tensor& eps) {
  require_same_shape(x0, x1, "brownian_interpolate");
  require_same_shape(x0, eps, "brownian_interpolate");
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("brownian_interpolate: t outside [0,1]");
  Tensor out(x0.dims());
  kernels::active().mix3(out.data(), 1.0 - t, x0.data(), t, x1.data(), std::sqrt(t * (1.0 - t)),
                         eps.data(), static_cast<size_t>(out.numel()));
  return out;
}

Tensor velocity_target(const Tensor& z_tgt, const Tensor& eps, double t, const NoiseSchedule& s) {
  require_same_shape(z_tgt, eps, "velocity_target");
  const BridgeCoefficients k = s.coefficients(t);
  if (!(k.rho > 0.0)) throw std::domain_error("velocity_target: rho_t = 0 at t = 1");
  Tensor out(z_tgt.dims());
  kernels::active().mix2(out.data(), k.a / k.rho, eps.data(), -k.c / k.rho, z_tgt.data(),
                         static_cast<size_t>(out.numel()));
  return out;
}

Tensor analytic_score(const Tensor& z_t, const Tensor& z_tgt, const Tensor& z_src, double t,
                      const NoiseSchedule& s) {
  require_same_shape(z_t, z_tgt, "analytic_score");
  require_same_shape(z_t, z_src, "analytic_score");
  const BridgeCoefficients k = s.coefficients(t);
  const double csq = k.c * k.c;
  if (!(csq > 0.0)) throw std::domain_error("analytic_score: c_t = 0 at an endpoint");
  Tensor out(z_t.dims());
  // -(z - a*tgt - b*src)/c^2
  kernels::active().mix3(out.data(), -1.0 / csq, z_t.data(), k.a / csq, z_tgt.data(), k.b / csq,
                         z_src.data(), static_cast<size_t>(out.numel()));
  return out;
}

Tensor guidance_h(const Tensor& z_t, const Tensor& z_src, double t, const NoiseSchedule& s) {
  require_same_shape(z_t, z_src, "guidance_h");
  const double sbar_sq = s.sigma_bar_sq(t);
  if (!(sbar_sq > 0.0)) throw std::domain_error("guidance_h: sigma_bar^2 = 0 at t = 1");
  Tensor out(z_t.dims());
  kernels::active().mix2(out.data(), 1.0 / sbar_sq, z_src.data(), -1.0 / sbar_sq, z_t.data(),
                         static_cast<size_t>(out.numel()));
  return out;
}

Tensor recover_target(const Tensor& z_t, const Tensor& v_hat, const Tensor& z_src, double t,
                      const NoiseSchedule& s) {
  require_same_shape(z_t, v_hat, "recover_target");
  require_same_shape(z_t, z_src, "recover_target");
  const BridgeCoefficients k = s.coefficients(t);
  if (!(k.c > 0.0) || !(k.rho > 0.0))
    throw std::domain_error("recover_target: undefined at a c_t = 0 endpoint");
  const double rho_sq = k.rho * k.rho;
  Tensor out(z_t.dims());
  kernels::active().mix3(out.data(), k.a / rho_sq, z_t.data(), -k.a * k.b / rho_sq, z_src.data(),
                         -k.c / k.rho, v_hat.data(), static_cast<size_t>(out.numel()));
  return out;
}

std::vector<BridgeState> simulate_forward_bridge(const Tensor& z_tgt, const Tensor& z_src,
                                                 int n_steps, const NoiseSchedule& s,
                                                 uint64_t seed) {
  require_same_shape(z_tgt, z_src, "simulate_forward_bridge");
  if (n_steps < 10) throw std::invalid_argument("simulate_forward_bridge: n_steps < 10");
  const double dt = 1.0 / n_steps;
  // In normalized mode the clock is sigma^2/sigma_1^2, so the effective g^2 is
  // beta/sigma_1^2; the drift h uses the matching normalized sigma_bar^2.
  const double gscale = s.normalized() ? 1.0 / s.sigma1_sq_raw() : 1.0;

  Prng rng(seed, 0x5de);
  std::vector<BridgeState> traj;
  traj.reserve(static_cast<size_t>(n_steps) + 1);
  traj.push_back({z_tgt, 0.0});

  Tensor z = z_tgt;
  const int64_t n = z.numel();
  for (int k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double gsq = s.beta(t) * gscale;
    const double sbar_sq = s.sigma_bar_sq(t);
    const double drift = gsq / sbar_sq;
    const double diffusion = std::sqrt(gsq * dt);
    for (int64_t i = 0; i < n; ++i)
      z[i] += drift * (z_src[i] - z[i]) * dt + diffusion * rng.normal();
    traj.push_back({z, (k + 1 == n_steps) ? 1.0 : t + dt});
  }
  return traj;
}

}  // namespace maskbridge
