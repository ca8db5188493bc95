#include <cmath>
#include <vector>

#include "kernels_common.hpp"
#include "maskbridge/kernels.hpp"

namespace maskbridge::kernels {
namespace {

void mix2(double* dst, double a, const double* x, double b, const double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = a * x[i] + b * y[i];
}

void mix3(double* dst, double a, const double* x, double b, const double* y, double c,
          const double* z, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = a * x[i] + b * y[i] + c * z[i];
}

void mul(double* dst, const double* x, const double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = x[i] * y[i];
}

void film(double* dst, const double* h, const double* gamma, const double* beta, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = h[i] * (1.0 + gamma[i]) + beta[i];
}

void film_backward(double* dst, const double* dout, const double* gamma, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = dout[i] * (1.0 + gamma[i]);
}

void tanh_forward(double* dst, const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = std::tanh(x[i]);
}

void tanh_backward(double* dst, const double* dout, const double* act, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] = dout[i] * (1.0 - act[i] * act[i]);
}

thread_local std::vector<double> g_pad;

void conv3x3(double* out, const double* in, const double* w, const double* bias, int cin, int cout,
             int h, int wd) {
  detail::pad_input(g_pad, in, cin, h, wd);
  const size_t pw = static_cast<size_t>(wd) + 2, ph = static_cast<size_t>(h) + 2;
  for (int oc = 0; oc < cout; ++oc) {
    double* op = out + static_cast<size_t>(oc) * h * wd;
    const double b0 = bias ? bias[oc] : 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < wd; ++x) {
        double acc = b0;
        for (int ic = 0; ic < cin; ++ic) {
          const double* plane = g_pad.data() + static_cast<size_t>(ic) * ph * pw;
          const double* wk = w + ((static_cast<size_t>(oc) * cin + ic) * 9);
          for (int ky = 0; ky < 3; ++ky) {
            const double* row = plane + (static_cast<size_t>(y) + ky) * pw + x;
            acc += wk[ky * 3 + 0] * row[0] + wk[ky * 3 + 1] * row[1] + wk[ky * 3 + 2] * row[2];
          }
        }
        op[static_cast<size_t>(y) * wd + x] = acc;
      }
  }
}

void conv3x3_wgrad(double* dw, double* db, const double* in, const double* dout, int cin, int cout,
                   int h, int wd) {
  detail::pad_input(g_pad, in, cin, h, wd);
  const size_t pw = static_cast<size_t>(wd) + 2, ph = static_cast<size_t>(h) + 2;
  for (int oc = 0; oc < cout; ++oc) {
    const double* dop = dout + static_cast<size_t>(oc) * h * wd;
    double bsum = 0.0;
    for (int i = 0; i < h * wd; ++i) bsum += dop[i];
    db[oc] += bsum;
    for (int ic = 0; ic < cin; ++ic) {
      const double* plane = g_pad.data() + static_cast<size_t>(ic) * ph * pw;
      double* wk = dw + ((static_cast<size_t>(oc) * cin + ic) * 9);
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          double acc = 0.0;
          for (int y = 0; y < h; ++y) {
            const double* row = plane + (static_cast<size_t>(y) + ky) * pw + kx;
            const double* drow = dop + static_cast<size_t>(y) * wd;
            for (int x = 0; x < wd; ++x) acc += drow[x] * row[x];
          }
          wk[ky * 3 + kx] += acc;
        }
    }
  }
}

void adamw(double* p, double* m, double* v, const double* g, size_t n, double lr, double beta1,
           double beta2, double eps, double weight_decay, double bias_c1, double bias_c2) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bias_c1;
    const double vhat = v[i] / bias_c2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
  }
}

double sum_sq_diff(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar", mix2,         mix3,          mul,     film,
                       film_backward, tanh_forward, tanh_backward, conv3x3, conv3x3_wgrad,
                       adamw,         sum_sq_diff};
  return ops;
}

}  // namespace maskbridge::kernels
