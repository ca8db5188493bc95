#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "maskbridge/baseline.hpp"
#include "maskbridge/data.hpp"
#include "maskbridge/model.hpp"
#include "maskbridge/schedule.hpp"

namespace maskbridge {

enum class LossKind { BridgeVelocity, DiffusionNoise };

struct TrainConfig {
  double lr = 1e-3;  // toy default; the large-model value 2e-5 stays selectable
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  int batch_size = 8;
  int total_steps = 2000;
  double t_clamp_hi = 0.9999;  // keeps rho_t > 0 when sampling t
  uint64_t seed = 0;
  LossKind loss_kind = LossKind::BridgeVelocity;
};

struct OptimState {
  Gradients m;
  Gradients v;
  int64_t step = 0;

  static OptimState zeros_like(const ModelParams& p) {
    return {ModelParams::zeros_like(p), ModelParams::zeros_like(p), 0};
  }
};

struct divergence_error : std::runtime_error {
  int step;
  explicit divergence_error(int s)
      : std::runtime_error("training diverged at step " + std::to_string(s)), step(s) {}
};

// p <- p - lr*(mhat/(sqrt(vhat)+eps) + wd*p), bias-corrected moments.
void adamw_step(ModelParams& p, const Gradients& g, OptimState& o, const TrainConfig& cfg);

// Velocity-matching loss for one triplet at explicit (t, eps).
double bridge_loss(const ModelParams& p, const RemovalTriplet& triplet, double t, const Tensor& eps,
                   const NoiseSchedule& s);

struct LossPoint {
  int step;
  double loss;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossPoint> curve;
};

// Deterministic loop: per-(step, slot) draws come from a counter-based
// generator keyed by (seed, step, slot), so batch composition does not depend
// on iteration order. Aborts with divergence_error when the loss exceeds 1e6
// or turns non-finite.
TrainResult train(const std::vector<RemovalTriplet>& dataset, const ModelShape& shape,
                  const TrainConfig& cfg, const NoiseSchedule& s,
                  const DiffusionSchedule* dsched = nullptr);

void write_loss_csv(const std::string& path, const std::vector<LossPoint>& curve);

}  // namespace maskbridge
