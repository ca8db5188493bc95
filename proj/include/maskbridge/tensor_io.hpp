#pragma once

#include <string>

#include "maskbridge/checkpoint.hpp"  // format_error
#include "maskbridge/tensor.hpp"

namespace maskbridge {

// Tensor file: magic "BRT1", u32 ndim, u32 dims..., float32 little-endian
// row-major payload.
void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

}  // namespace maskbridge
