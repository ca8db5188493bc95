#include <doctest.h>

#include <cmath>
#include <vector>

#include "maskbridge/kernels.hpp"
#include "maskbridge/rng.hpp"

using namespace maskbridge;

namespace {

std::vector<double> randv(size_t n, uint64_t seed) {
  std::vector<double> v(n);
  Prng rng(seed, 0xbe);
  for (auto& x : v) x = rng.normal();
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-11) {
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    const double bound = tol * (1.0 + std::fabs(a[i]));
    REQUIRE(std::fabs(a[i] - b[i]) <= bound);
  }
}

// Direct convolution with explicit bounds checks; independent of the padded
// scratch-buffer scheme inside the kernels.
void conv3x3_naive(double* out, const double* in, const double* w, const double* bias, int cin,
                   int cout, int h, int wd) {
  for (int oc = 0; oc < cout; ++oc)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < wd; ++x) {
        double acc = bias ? bias[oc] : 0.0;
        for (int ic = 0; ic < cin; ++ic)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int yy = y + ky - 1, xx = x + kx - 1;
              if (yy < 0 || yy >= h || xx < 0 || xx >= wd) continue;
              acc += w[((oc * cin + ic) * 3 + ky) * 3 + kx] * in[(ic * h + yy) * wd + xx];
            }
        out[(oc * h + y) * wd + x] = acc;
      }
}

void wgrad_naive(double* dw, double* db, const double* in, const double* dout, int cin, int cout,
                 int h, int wd) {
  for (int oc = 0; oc < cout; ++oc) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < wd; ++x) db[oc] += dout[(oc * h + y) * wd + x];
    for (int ic = 0; ic < cin; ++ic)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx)
          for (int y = 0; y < h; ++y)
            for (int x = 0; x < wd; ++x) {
              const int yy = y + ky - 1, xx = x + kx - 1;
              if (yy < 0 || yy >= h || xx < 0 || xx >= wd) continue;
              dw[((oc * cin + ic) * 3 + ky) * 3 + kx] +=
                  dout[(oc * h + y) * wd + x] * in[(ic * h + yy) * wd + xx];
            }
  }
}

const size_t kSizes[] = {1, 2, 3, 5, 8, 15, 16, 21, 64, 67, 257};

}  // namespace

TEST_CASE("elementwise kernels: avx2 matches scalar on awkward sizes") {
  if (!kernels::avx2_available()) return;
  const auto& sc = kernels::scalar_ops();
  const auto& vx = kernels::avx2_ops();
  for (size_t n : kSizes) {
    const auto x = randv(n, 1), y = randv(n, 2), z = randv(n, 3);
    std::vector<double> a(n), b(n);

    sc.mix2(a.data(), 0.3, x.data(), -1.7, y.data(), n);
    vx.mix2(b.data(), 0.3, x.data(), -1.7, y.data(), n);
    check_close(a, b);

    sc.mix3(a.data(), 0.3, x.data(), -1.7, y.data(), 0.9, z.data(), n);
    vx.mix3(b.data(), 0.3, x.data(), -1.7, y.data(), 0.9, z.data(), n);
    check_close(a, b);

    sc.mul(a.data(), x.data(), y.data(), n);
    vx.mul(b.data(), x.data(), y.data(), n);
    check_close(a, b, 0.0);  // identical operations, bitwise

    sc.film(a.data(), x.data(), y.data(), z.data(), n);
    vx.film(b.data(), x.data(), y.data(), z.data(), n);
    check_close(a, b);

    sc.film_backward(a.data(), x.data(), y.data(), n);
    vx.film_backward(b.data(), x.data(), y.data(), n);
    check_close(a, b);

    sc.tanh_backward(a.data(), x.data(), y.data(), n);
    vx.tanh_backward(b.data(), x.data(), y.data(), n);
    check_close(a, b);

    const double s1 = sc.sum_sq_diff(x.data(), y.data(), n);
    const double s2 = vx.sum_sq_diff(x.data(), y.data(), n);
    REQUIRE(std::fabs(s1 - s2) <= 1e-11 * (1.0 + std::fabs(s1)));
  }
}

TEST_CASE("conv3x3: both backends match a direct bounds-checked oracle") {
  struct Case {
    int cin, cout, h, w;
  };
  const Case cases[] = {{1, 1, 4, 4}, {3, 5, 8, 8}, {12, 32, 16, 16}, {2, 3, 5, 7}, {4, 4, 9, 13}};
  for (const auto& c : cases) {
    const auto in = randv(static_cast<size_t>(c.cin) * c.h * c.w, 11);
    const auto w = randv(static_cast<size_t>(c.cout) * c.cin * 9, 12);
    const auto bias = randv(static_cast<size_t>(c.cout), 13);
    std::vector<double> ref(static_cast<size_t>(c.cout) * c.h * c.w, 0.0);
    conv3x3_naive(ref.data(), in.data(), w.data(), bias.data(), c.cin, c.cout, c.h, c.w);

    std::vector<double> out(ref.size(), -1.0);
    kernels::scalar_ops().conv3x3(out.data(), in.data(), w.data(), bias.data(), c.cin, c.cout, c.h,
                                  c.w);
    check_close(ref, out);

    if (kernels::avx2_available()) {
      std::vector<double> out2(ref.size(), -1.0);
      kernels::avx2_ops().conv3x3(out2.data(), in.data(), w.data(), bias.data(), c.cin, c.cout,
                                  c.h, c.w);
      check_close(ref, out2);
    }
  }
}

TEST_CASE("conv3x3_wgrad: both backends match a direct oracle and accumulate") {
  const int cin = 3, cout = 4, h = 7, w = 10;
  const auto in = randv(static_cast<size_t>(cin) * h * w, 21);
  const auto dout = randv(static_cast<size_t>(cout) * h * w, 22);

  std::vector<double> ref_w(static_cast<size_t>(cout) * cin * 9, 0.5), ref_b(cout, 0.25);
  wgrad_naive(ref_w.data(), ref_b.data(), in.data(), dout.data(), cin, cout, h, w);

  std::vector<double> got_w(ref_w.size(), 0.5), got_b(cout, 0.25);
  kernels::scalar_ops().conv3x3_wgrad(got_w.data(), got_b.data(), in.data(), dout.data(), cin,
                                      cout, h, w);
  check_close(ref_w, got_w);
  check_close(ref_b, got_b);

  if (kernels::avx2_available()) {
    std::vector<double> vw(ref_w.size(), 0.5), vb(cout, 0.25);
    kernels::avx2_ops().conv3x3_wgrad(vw.data(), vb.data(), in.data(), dout.data(), cin, cout, h,
                                      w);
    check_close(ref_w, vw);
    check_close(ref_b, vb);
  }
}

TEST_CASE("adamw kernel: avx2 matches scalar") {
  if (!kernels::avx2_available()) return;
  for (size_t n : kSizes) {
    auto p1 = randv(n, 31), m1 = randv(n, 32), v1 = randv(n, 33);
    for (auto& x : v1) x = std::fabs(x);
    const auto g = randv(n, 34);
    auto p2 = p1, m2 = m1, v2 = v1;
    kernels::scalar_ops().adamw(p1.data(), m1.data(), v1.data(), g.data(), n, 1e-3, 0.9, 0.999,
                                1e-8, 0.01, 0.1, 0.001);
    kernels::avx2_ops().adamw(p2.data(), m2.data(), v2.data(), g.data(), n, 1e-3, 0.9, 0.999, 1e-8,
                              0.01, 0.1, 0.001);
    check_close(p1, p2);
    check_close(m1, m2);
    check_close(v1, v2);
  }
}

TEST_CASE("backend dispatch is explicit and reversible") {
  const auto initial = kernels::active_backend();
  kernels::set_backend(kernels::Backend::Scalar);
  REQUIRE(kernels::active_backend() == kernels::Backend::Scalar);
  kernels::set_backend(kernels::Backend::Avx2);
  if (kernels::avx2_available())
    REQUIRE(kernels::active_backend() == kernels::Backend::Avx2);
  else
    REQUIRE(kernels::active_backend() == kernels::Backend::Scalar);
  kernels::set_backend(initial);
}
