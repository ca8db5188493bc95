#include "maskbridge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace maskbridge {

namespace {
size_t checked_numel(const std::vector<int64_t>& dims) {
  if (dims.empty()) throw std::invalid_argument("tensor: empty dims");
  size_t n = 1;
  for (int64_t d : dims) {
    if (d <= 0) throw std::invalid_argument("tensor: non-positive extent");
    if (n > (static_cast<size_t>(1) << 40) / static_cast<size_t>(d))
      throw std::invalid_argument("tensor: extent product overflow");
    n *= static_cast<size_t>(d);
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> dims) : dims_(std::move(dims)), data_(checked_numel(dims_), 0.0) {}

Tensor::Tensor(std::vector<int64_t> dims, double fill)
    : dims_(std::move(dims)), data_(checked_numel(dims_), fill) {}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace maskbridge
