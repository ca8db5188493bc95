#pragma once

#include <cstdint>
#include <vector>

namespace maskbridge {

// Dense row-major n-dimensional array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> dims);
  Tensor(std::vector<int64_t> dims, double fill);

  static Tensor zeros(std::vector<int64_t> dims) { return Tensor(std::move(dims)); }
  static Tensor full(std::vector<int64_t> dims, double v) { return Tensor(std::move(dims), v); }
  static Tensor scalar(double v) { return Tensor({1}, v); }

  const std::vector<int64_t>& dims() const { return dims_; }
  int64_t dim(int i) const { return dims_[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(dims_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }
  bool all_finite() const;
  void fill(double v);

 private:
  std::vector<int64_t> dims_;
  std::vector<double> data_;
};

// Throws std::invalid_argument when shapes differ; used by the bridge/sampler ops.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace maskbridge
