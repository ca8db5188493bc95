#include <atomic>
#include <cstdlib>
#include <cstring>

#include "maskbridge/kernels.hpp"

namespace maskbridge::kernels {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* select_initial() {
  if (const char* env = std::getenv("MASKBRIDGE_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
    if (std::strcmp(env, "avx2") == 0 && avx2_available()) return &avx2_ops();
  }
  return avx2_available() ? &avx2_ops() : &scalar_ops();
}

std::atomic<const Ops*> g_active{nullptr};

}  // namespace

bool avx2_available() { return avx2_compiled() && cpu_has_avx2_fma(); }

const Ops& active() {
  const Ops* p = g_active.load(std::memory_order_acquire);
  if (!p) {
    p = select_initial();
    g_active.store(p, std::memory_order_release);
  }
  return *p;
}

Backend active_backend() {
  return &active() == &scalar_ops() ? Backend::Scalar : Backend::Avx2;
}

void set_backend(Backend b) {
  g_active.store(b == Backend::Avx2 && avx2_available() ? &avx2_ops() : &scalar_ops(),
                 std::memory_order_release);
}

}  // namespace maskbridge::kernels
