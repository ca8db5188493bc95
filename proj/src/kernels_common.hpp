#pragma once

#include <cstring>
#include <vector>

namespace maskbridge::kernels::detail {

// Copies [C][H][W] into a zero-bordered [C][H+2][W+2] scratch. A few slack
// doubles at the end let vector loads run past the last row safely.
inline void pad_input(std::vector<double>& buf, const double* in, int cin, int h, int wd) {
  const size_t ph = static_cast<size_t>(h) + 2, pw = static_cast<size_t>(wd) + 2;
  buf.assign(static_cast<size_t>(cin) * ph * pw + 8, 0.0);
  for (int c = 0; c < cin; ++c)
    for (int y = 0; y < h; ++y)
      std::memcpy(&buf[(static_cast<size_t>(c) * ph + static_cast<size_t>(y) + 1) * pw + 1],
                  &in[(static_cast<size_t>(c) * h + y) * wd], static_cast<size_t>(wd) * sizeof(double));
}

}  // namespace maskbridge::kernels::detail
