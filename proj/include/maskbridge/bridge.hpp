#pragma once

#include <cstdint>
#include <vector>

#include "maskbridge/schedule.hpp"
#include "maskbridge/tensor.hpp"

namespace maskbridge {

struct BridgeState {
  Tensor z;
  double t;
};

// Marginal sample z_t = a_t*z_tgt + b_t*z_src + c_t*eps.
Tensor interpolate(const Tensor& z_tgt, const Tensor& z_src, double t, const Tensor& eps,
                   const NoiseSchedule& s);

// Reference constant-coefficient bridge: (1-t)*x0 + t*x1 + sqrt(t(1-t))*eps.
Tensor brownian_interpolate(const Tensor& x0, const Tensor& x1, double t, const Tensor& eps);

// Training target u_t = (a_t/rho_t)*eps - (c_t/rho_t)*z_tgt. Undefined at the
// t = 1 endpoint where rho_t = 0.
Tensor velocity_target(const Tensor& z_tgt, const Tensor& eps, double t, const NoiseSchedule& s);

// Exact conditional score -(z_t - a*z_tgt - b*z_src) / c^2, valid for 0 < t < 1.
Tensor analytic_score(const Tensor& z_t, const Tensor& z_tgt, const Tensor& z_src, double t,
                      const NoiseSchedule& s);

// Pinning drift h = (z_src - z_t) / sigma_bar_t^2 of the forward SDE.
Tensor guidance_h(const Tensor& z_t, const Tensor& z_src, double t, const NoiseSchedule& s);

// Inverts the velocity parameterization:
// z0_hat = (a/rho^2)*z_t - (a*b/rho^2)*z_src - (c/rho)*v_hat.
Tensor recover_target(const Tensor& z_t, const Tensor& v_hat, const Tensor& z_src, double t,
                      const NoiseSchedule& s);

// Euler-Maruyama simulation of dz = g^2 h dt + g dw from z_tgt at t=0 toward
// the z_src pin at t=1. Monte-Carlo oracle only; never on the sampling path.
std::vector<BridgeState> simulate_forward_bridge(const Tensor& z_tgt, const Tensor& z_src,
                                                 int n_steps, const NoiseSchedule& s,
                                                 uint64_t seed);

}  // namespace maskbridge
