#pragma once

#include <cstddef>

namespace maskbridge::kernels {

enum class Backend { Scalar, Avx2 };

// Hot inner loops behind function pointers. Scalar entries are the reference
// semantics; the AVX2 table is equivalence-tested against them (FMA variants
// differ from mul+add references by rounding, so comparisons are tolerance
// based, not bitwise).
struct Ops {
  const char* name;

  // dst = a*x + b*y
  void (*mix2)(double* dst, double a, const double* x, double b, const double* y, size_t n);
  // dst = a*x + b*y + c*z
  void (*mix3)(double* dst, double a, const double* x, double b, const double* y, double c,
               const double* z, size_t n);
  // dst = x .* y
  void (*mul)(double* dst, const double* x, const double* y, size_t n);
  // dst = h .* (1 + gamma) + beta
  void (*film)(double* dst, const double* h, const double* gamma, const double* beta, size_t n);
  // dst = dout .* (1 + gamma)
  void (*film_backward)(double* dst, const double* dout, const double* gamma, size_t n);
  void (*tanh_forward)(double* dst, const double* x, size_t n);
  // dst = dout .* (1 - act^2), act = tanh output
  void (*tanh_backward)(double* dst, const double* dout, const double* act, size_t n);
  // 3x3 same-size zero-padded convolution over row-major [C][H][W]; bias per
  // output channel or null.
  void (*conv3x3)(double* out, const double* in, const double* w, const double* bias, int cin,
                  int cout, int h, int wd);
  // Accumulates dw[oc][ic][ky][kx] and db[oc] for the conv above.
  void (*conv3x3_wgrad)(double* dw, double* db, const double* in, const double* dout, int cin,
                        int cout, int h, int wd);
  // Decoupled weight decay step with bias-corrected moments.
  void (*adamw)(double* p, double* m, double* v, const double* g, size_t n, double lr,
                double beta1, double beta2, double eps, double weight_decay, double bias_c1,
                double bias_c2);
  double (*sum_sq_diff)(const double* a, const double* b, size_t n);
};

const Ops& scalar_ops();
const Ops& avx2_ops();   // valid only when avx2_available()
bool avx2_compiled();
bool avx2_available();   // compiled in and supported by this CPU

// Runtime-selected table. First call picks AVX2 when available; the env var
// MASKBRIDGE_KERNELS=scalar|avx2 overrides. Selection is process-wide and
// stable afterwards, so runs on one machine are bitwise reproducible.
const Ops& active();
Backend active_backend();
void set_backend(Backend b);  // test hook

}  // namespace maskbridge::kernels
