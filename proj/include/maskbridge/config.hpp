#pragma once

#include <cstdint>
#include <string>

#include "maskbridge/schedule.hpp"
#include "maskbridge/training.hpp"

namespace maskbridge {

// Flat key=value run configuration. Unknown keys are rejected; missing keys
// take the defaults below (paper values where they exist).
struct Config {
  double beta_min = 0.01;
  double beta_max = 50.0;
  bool normalized = true;
  std::string paradigm = "bridge";  // bridge | diffusion
  double lr = 1e-3;
  double weight_decay = 0.01;
  int batch_size = 8;
  int total_steps = 2000;
  int steps_infer = 50;
  double t_clamp_hi = 0.9999;
  uint64_t seed = 0;
  int frames = 4;   // F
  int height = 16;  // H
  int width = 16;   // W
  std::string dataset_dir = "data";
  std::string checkpoint = "model.brw";
  bool amm_enabled = true;

  static Config from_file(const std::string& path);
  void apply_kv(const std::string& key, const std::string& value);  // throws on unknown key

  NoiseSchedule schedule() const { return NoiseSchedule(beta_min, beta_max, normalized); }
  ModelShape model_shape() const { return {frames, 32, 8, 16, amm_enabled}; }
  TrainConfig train_config() const;
};

}  // namespace maskbridge
