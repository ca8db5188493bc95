#pragma once

#include <stdexcept>
#include <string>

#include "maskbridge/model.hpp"

namespace maskbridge {

struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint file: magic "BRW1", then per tensor (in named_tensors order):
// u32 name length, name bytes, u32 ndim, u32 dims..., float32 little-endian
// row-major payload. AMM tensors are present only when the branch is enabled.
void save_checkpoint(const std::string& path, const ModelParams& p);
ModelParams load_checkpoint(const std::string& path);

}  // namespace maskbridge
