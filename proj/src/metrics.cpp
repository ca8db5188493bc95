#include "maskbridge/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace maskbridge {

namespace {

std::optional<double> region_mse(const Tensor& a, const Tensor& b, const Tensor& mask,
                                 double mask_value) {
  double acc = 0.0;
  int64_t n = 0;
  for (int64_t i = 0; i < a.numel(); ++i)
    if (mask[i] == mask_value) {
      const double d = a[i] - b[i];
      acc += d * d;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

}  // namespace

EvalReport evaluate(const Tensor& output, const RemovalTriplet& triplet) {
  require_same_shape(output, triplet.target, "evaluate");
  require_same_shape(output, triplet.mask, "evaluate");
  EvalReport r;
  r.unmasked_mse = region_mse(output, triplet.target, triplet.mask, 0.0);
  r.masked_mse = region_mse(output, triplet.target, triplet.mask, 1.0);

  if (r.unmasked_mse) {
    if (*r.unmasked_mse > 0.0)
      r.unmasked_psnr = 10.0 * std::log10(kPsnrPeak * kPsnrPeak / *r.unmasked_mse);
    else
      r.unmasked_psnr = std::numeric_limits<double>::infinity();
  }

  if (r.masked_mse) {
    const auto src_mse = region_mse(triplet.source, triplet.target, triplet.mask, 1.0);
    if (src_mse && *src_mse > 0.0) r.removal_ratio = 1.0 - *r.masked_mse / *src_mse;
  }

  const int f = static_cast<int>(output.dim(0));
  if (f >= 2) {
    const int64_t plane = output.numel() / f;
    double acc = 0.0;
    int64_t n = 0;
    for (int fi = 0; fi + 1 < f; ++fi)
      for (int64_t i = 0; i < plane; ++i) {
        const int64_t at = fi * plane + i, nxt = at + plane;
        if (triplet.mask[at] == 0.0 && triplet.mask[nxt] == 0.0) {
          const double d_out = output[nxt] - output[at];
          const double d_tgt = triplet.target[nxt] - triplet.target[at];
          acc += std::fabs(d_out - d_tgt);
          ++n;
        }
      }
    if (n > 0) r.temporal_consistency = acc / static_cast<double>(n);
  }
  return r;
}

namespace {
std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", *v);
  return buf;
}
}  // namespace

std::string eval_csv_header() {
  return "id,steps,unmasked_mse,unmasked_psnr,masked_mse,removal_ratio,temporal_consistency";
}

std::string eval_csv_row(const std::string& id, int steps, const EvalReport& r) {
  return id + "," + std::to_string(steps) + "," + cell(r.unmasked_mse) + "," +
         cell(r.unmasked_psnr) + "," + cell(r.masked_mse) + "," + cell(r.removal_ratio) + "," +
         cell(r.temporal_consistency);
}

}  // namespace maskbridge
