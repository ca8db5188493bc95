#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maskbridge/tensor.hpp"

namespace maskbridge {

// Training/eval unit: a source clip with a composited moving blob, the clean
// background target, and the binary blob mask, each [F][H][W].
struct RemovalTriplet {
  Tensor source;
  Tensor target;
  Tensor mask;
};

enum class BlobVariant { Normal, Large };

struct GenSpec {
  int frames = 4;
  int height = 16;
  int width = 16;
  int n_waves = 3;
  double blob_amp = 1.0;
  double radius_min = 1.5;
  double radius_max = 4.0;
  double drift_x = 0.5;  // background translation, px per frame
  double drift_y = 0.25;
  BlobVariant variant = BlobVariant::Normal;
  uint64_t seed = 0;
};

// Deterministic in (spec.seed, index). Background: n_waves drifting sinusoids
// rescaled to [-1,1]. Blob: Gaussian bump w = exp(-d^2/(2 r^2)) around a
// linearly moving center; source = background + w*blob_amp and the mask marks
// w > 0.1, so |source-target| <= 0.1*blob_amp on every mask=0 pixel.
RemovalTriplet generate_triplet(const GenSpec& spec, uint64_t index);

constexpr double kMaskThreshold = 0.1;
double feather_bound(const GenSpec& spec);

// Dataset directory: NNNN_src.brt / NNNN_tgt.brt / NNNN_mask.brt plus a
// manifest.txt with one index per line.
void write_dataset(const std::string& dir, const GenSpec& spec, int count);
std::vector<RemovalTriplet> load_dataset(const std::string& dir);
RemovalTriplet load_triplet_files(const std::string& prefix);
std::string triplet_index_prefix(const std::string& dir, uint64_t index);

}  // namespace maskbridge
