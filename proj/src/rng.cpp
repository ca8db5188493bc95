#include "maskbridge/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace maskbridge {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace

Prng::Prng(uint64_t seed, uint64_t stream) : ctr_(mix64(seed + kGolden) ^ mix64(stream * kGolden + 1)) {}

uint64_t Prng::next_u64() {
  ctr_ += kGolden;
  return mix64(ctr_);
}

double Prng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Prng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0,1] keeps the log finite.
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

uint64_t Prng::uniform_index(uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  return next_u64() % n;
}

void Prng::fill_normal(double* dst, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dst[i] = normal();
}

Tensor Prng::normal_tensor(std::vector<int64_t> dims) {
  Tensor t(std::move(dims));
  fill_normal(t);
  return t;
}

uint64_t Prng::key(uint64_t a, uint64_t b) { return mix64(a * kGolden + 1) ^ mix64(b + kGolden); }

}  // namespace maskbridge
