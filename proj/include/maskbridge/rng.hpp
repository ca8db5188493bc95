#pragma once

#include <cstdint>

#include "maskbridge/tensor.hpp"

namespace maskbridge {

// Counter-based deterministic generator: a splitmix64 stream whose starting
// counter is derived from (seed, stream). Two Prng instances with the same
// key produce identical sequences on every platform. Gaussian draws use
// Box-Muller with a cached spare.
class Prng {
 public:
  explicit Prng(uint64_t seed, uint64_t stream = 0);

  uint64_t next_u64();
  double uniform();                 // [0, 1)
  double normal();                  // N(0, 1)
  uint64_t uniform_index(uint64_t n);  // [0, n)

  void fill_normal(double* dst, int64_t n);
  void fill_normal(Tensor& t) { fill_normal(t.data(), t.numel()); }
  Tensor normal_tensor(std::vector<int64_t> dims);

  // Order-independent key for per-(step, slot) draws.
  static uint64_t key(uint64_t a, uint64_t b);

 private:
  uint64_t ctr_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace maskbridge
