// AVX2+FMA variants of the hot kernels. This translation unit is the only one
// built with -mavx2 -mfma; everything else stays at the baseline ISA so the
// binary still runs (via the scalar table) on older CPUs.

#include <cmath>
#include <vector>

#include "kernels_common.hpp"
#include "maskbridge/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace maskbridge::kernels {
namespace {

inline __m256i tail_mask(size_t rem) {
  // rem in [1,3]: lanes below rem get all-ones (load/store enabled).
  const long long r = static_cast<long long>(rem);
  return _mm256_setr_epi64x(0 < r ? -1 : 0, 1 < r ? -1 : 0, 2 < r ? -1 : 0, 3 < r ? -1 : 0);
}

void mix2(double* dst, double a, const double* x, double b, const double* y, size_t n) {
  const __m256 aV_unused{};  (void)aV_unused;
  const __m256d av = _mm256_set1_pd(a), bv = _mm256_set1_pd(b);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
    r = _mm256_fmadd_pd(bv, _mm256_loadu_pd(y + i), r);
    _mm256_storeu_pd(dst + i, r);
  }
  for (; i < n; ++i) dst[i] = a * x[i] + b * y[i];
}

void mix3(double* dst, double a, const double* x, double b, const double* y, double c,
          const double* z, size_t n) {
  const __m256d av = _mm256_set1_pd(a), bv = _mm256_set1_pd(b), cv = _mm256_set1_pd(c);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
    r = _mm256_fmadd_pd(bv, _mm256_loadu_pd(y + i), r);
    r = _mm256_fmadd_pd(cv, _mm256_loadu_pd(z + i), r);
    _mm256_storeu_pd(dst + i, r);
  }
  for (; i < n; ++i) dst[i] = a * x[i] + b * y[i] + c * z[i];
}

void mul(double* dst, const double* x, const double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) dst[i] = x[i] * y[i];
}

void film(double* dst, const double* h, const double* gamma, const double* beta, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d hv = _mm256_loadu_pd(h + i);
    __m256d r = _mm256_fmadd_pd(hv, _mm256_loadu_pd(gamma + i), hv);
    r = _mm256_add_pd(r, _mm256_loadu_pd(beta + i));
    _mm256_storeu_pd(dst + i, r);
  }
  for (; i < n; ++i) dst[i] = h[i] * (1.0 + gamma[i]) + beta[i];
}

void film_backward(double* dst, const double* dout, const double* gamma, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dv = _mm256_loadu_pd(dout + i);
    _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(dv, _mm256_loadu_pd(gamma + i), dv));
  }
  for (; i < n; ++i) dst[i] = dout[i] * (1.0 + gamma[i]);
}

void tanh_forward(double* dst, const double* x, size_t n) {
  // libm tanh is the reference; no vector variant.
  for (size_t i = 0; i < n; ++i) dst[i] = std::tanh(x[i]);
}

void tanh_backward(double* dst, const double* dout, const double* act, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dv = _mm256_loadu_pd(dout + i);
    const __m256d av = _mm256_loadu_pd(act + i);
    _mm256_storeu_pd(dst + i, _mm256_fnmadd_pd(_mm256_mul_pd(dv, av), av, dv));
  }
  for (; i < n; ++i) dst[i] = dout[i] * (1.0 - act[i] * act[i]);
}

thread_local std::vector<double> g_pad;

void conv3x3(double* out, const double* in, const double* w, const double* bias, int cin, int cout,
             int h, int wd) {
  detail::pad_input(g_pad, in, cin, h, wd);
  const size_t pw = static_cast<size_t>(wd) + 2, ph = static_cast<size_t>(h) + 2;
  const double* pad = g_pad.data();
  for (int oc = 0; oc < cout; ++oc) {
    double* op = out + static_cast<size_t>(oc) * h * wd;
    const __m256d b0 = _mm256_set1_pd(bias ? bias[oc] : 0.0);
    for (int y = 0; y < h; ++y) {
      double* orow = op + static_cast<size_t>(y) * wd;
      for (int x0 = 0; x0 < wd; x0 += 4) {
        __m256d acc = b0;
        for (int ic = 0; ic < cin; ++ic) {
          const double* plane = pad + static_cast<size_t>(ic) * ph * pw;
          const double* wk = w + (static_cast<size_t>(oc) * cin + ic) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const double* row = plane + (static_cast<size_t>(y) + ky) * pw + x0;
            acc = _mm256_fmadd_pd(_mm256_set1_pd(wk[ky * 3 + 0]), _mm256_loadu_pd(row + 0), acc);
            acc = _mm256_fmadd_pd(_mm256_set1_pd(wk[ky * 3 + 1]), _mm256_loadu_pd(row + 1), acc);
            acc = _mm256_fmadd_pd(_mm256_set1_pd(wk[ky * 3 + 2]), _mm256_loadu_pd(row + 2), acc);
          }
        }
        const size_t rem = static_cast<size_t>(wd - x0);
        if (rem >= 4)
          _mm256_storeu_pd(orow + x0, acc);
        else
          _mm256_maskstore_pd(orow + x0, tail_mask(rem), acc);
      }
    }
  }
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void conv3x3_wgrad(double* dw, double* db, const double* in, const double* dout, int cin, int cout,
                   int h, int wd) {
  detail::pad_input(g_pad, in, cin, h, wd);
  const size_t pw = static_cast<size_t>(wd) + 2, ph = static_cast<size_t>(h) + 2;
  const double* pad = g_pad.data();
  const int wfull = wd & ~3;
  for (int oc = 0; oc < cout; ++oc) {
    const double* dop = dout + static_cast<size_t>(oc) * h * wd;
    __m256d bacc = _mm256_setzero_pd();
    double btail = 0.0;
    for (int y = 0; y < h; ++y) {
      const double* drow = dop + static_cast<size_t>(y) * wd;
      int x = 0;
      for (; x < wfull; x += 4) bacc = _mm256_add_pd(bacc, _mm256_loadu_pd(drow + x));
      for (; x < wd; ++x) btail += drow[x];
    }
    db[oc] += hsum(bacc) + btail;
    for (int ic = 0; ic < cin; ++ic) {
      const double* plane = pad + static_cast<size_t>(ic) * ph * pw;
      double* wk = dw + (static_cast<size_t>(oc) * cin + ic) * 9;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          __m256d acc = _mm256_setzero_pd();
          double tacc = 0.0;
          for (int y = 0; y < h; ++y) {
            const double* row = plane + (static_cast<size_t>(y) + ky) * pw + kx;
            const double* drow = dop + static_cast<size_t>(y) * wd;
            int x = 0;
            for (; x < wfull; x += 4)
              acc = _mm256_fmadd_pd(_mm256_loadu_pd(drow + x), _mm256_loadu_pd(row + x), acc);
            for (; x < wd; ++x) tacc += drow[x] * row[x];
          }
          wk[ky * 3 + kx] += hsum(acc) + tacc;
        }
    }
  }
}

void adamw(double* p, double* m, double* v, const double* g, size_t n, double lr, double beta1,
           double beta2, double eps, double weight_decay, double bias_c1, double bias_c2) {
  const __m256d b1 = _mm256_set1_pd(beta1), b2 = _mm256_set1_pd(beta2);
  const __m256d ob1 = _mm256_set1_pd(1.0 - beta1), ob2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d c1 = _mm256_set1_pd(bias_c1), c2 = _mm256_set1_pd(bias_c2);
  const __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps), wdv = _mm256_set1_pd(weight_decay);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(ob1, gv));
    __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                               _mm256_mul_pd(ob2, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_div_pd(mv, c1);
    const __m256d vhat = _mm256_div_pd(vv, c2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
    __m256d pv = _mm256_loadu_pd(p + i);
    const __m256d upd = _mm256_add_pd(_mm256_div_pd(mhat, denom), _mm256_mul_pd(wdv, pv));
    pv = _mm256_sub_pd(pv, _mm256_mul_pd(lrv, upd));
    _mm256_storeu_pd(p + i, pv);
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bias_c1;
    const double vhat = v[i] / bias_c2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
  }
}

double sum_sq_diff(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

bool avx2_compiled() { return true; }

const Ops& avx2_ops() {
  static const Ops ops{"avx2", mix2,         mix3,          mul,     film,
                       film_backward, tanh_forward, tanh_backward, conv3x3, conv3x3_wgrad,
                       adamw,         sum_sq_diff};
  return ops;
}

}  // namespace maskbridge::kernels

#else  // no AVX2 at compile time: fall back to the scalar table

namespace maskbridge::kernels {
bool avx2_compiled() { return false; }
const Ops& avx2_ops() { return scalar_ops(); }
}  // namespace maskbridge::kernels

#endif
