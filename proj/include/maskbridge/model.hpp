#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maskbridge/tensor.hpp"

namespace maskbridge {

struct ModelShape {
  int frames = 4;
  int hidden = 32;
  int amm_channels = 8;
  int time_dim = 16;
  bool amm_enabled = true;
};

// Velocity network over frame-channel stacks:
//   concat(z_t, z_src, mask) -> conv1 -> +time bias -> AMM -> tanh
//   -> conv2 -> tanh -> conv_out
// The mask branch (AMM) predicts spatially varying scale/shift from a 3x3
// mask embedding followed by two 1x1 projections; those projections start at
// exactly zero so the branch is the identity at initialization.
struct ModelParams {
  ModelShape shape;

  Tensor conv1_w, conv1_b;        // [hidden][3F][3][3], [hidden]
  Tensor conv2_w, conv2_b;        // [hidden][hidden][3][3], [hidden]
  Tensor conv_out_w, conv_out_b;  // [F][hidden][3][3], [F]
  Tensor time_w, time_b;          // [hidden][time_dim], [hidden]
  Tensor amm_embed_w, amm_embed_b;  // [A][F][3][3], [A]
  Tensor amm_gamma_w, amm_gamma_b;  // [hidden][A], [hidden]
  Tensor amm_beta_w, amm_beta_b;    // [hidden][A], [hidden]

  static ModelParams init(const ModelShape& shape, uint64_t seed);
  static ModelParams zeros_like(const ModelParams& p);

  // Fixed traversal order shared by the optimizer and the checkpoint format.
  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
  bool all_finite() const;
  int64_t parameter_count() const;
};

using Gradients = ModelParams;

std::vector<double> time_embedding(double t, int dim);

// gamma/beta from the mask branch; h stays untouched when they are zero.
Tensor amm_modulate(const Tensor& h, const Tensor& mask, const ModelParams& p);

Tensor forward(const ModelParams& p, const Tensor& z_t, double t, const Tensor& z_src,
               const Tensor& mask);

// One training sample: z_in is the process state fed to the network, target
// the regression target (velocity or noise), t_net the network time input.
struct TrainSample {
  int slot = 0;  // reduction key: batches are reduced in ascending slot order
  Tensor z_in;
  double t_net = 0.0;
  const Tensor* cond_src = nullptr;
  const Tensor* cond_mask = nullptr;
  Tensor target;
};

// Mean-squared-error loss over every element of the batch and its exact
// parameter gradients (accumulated into g, which must be zeros_like(p)).
double backward(const ModelParams& p, std::span<const TrainSample> batch, Gradients& g,
                double loss_scale = 1.0);

double batch_loss(const ModelParams& p, std::span<const TrainSample> batch);

}  // namespace maskbridge
