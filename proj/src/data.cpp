#include "maskbridge/data.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "maskbridge/rng.hpp"
#include "maskbridge/tensor_io.hpp"

namespace maskbridge {

namespace {

void validate(const GenSpec& spec) {
  if (spec.frames < 1 || spec.height < 4 || spec.width < 4)
    throw std::invalid_argument("gen spec: degenerate extents");
  if (spec.n_waves < 1) throw std::invalid_argument("gen spec: need at least one wave");
  if (!(spec.radius_min > 0.0 && spec.radius_max >= spec.radius_min))
    throw std::invalid_argument("gen spec: bad radius range");
  if (spec.variant == BlobVariant::Normal &&
      spec.radius_max >= 0.5 * std::min(spec.height, spec.width))
    throw std::invalid_argument("gen spec: radius must stay below min(H,W)/2 in normal mode");
  if (spec.blob_amp < 0.0) throw std::invalid_argument("gen spec: negative blob amplitude");
}

}  // namespace

double feather_bound(const GenSpec& spec) { return kMaskThreshold * spec.blob_amp; }

RemovalTriplet generate_triplet(const GenSpec& spec, uint64_t index) {
  validate(spec);
  const int f = spec.frames, h = spec.height, w = spec.width;
  const int64_t plane = static_cast<int64_t>(h) * w;

  RemovalTriplet tr;
  tr.target = Tensor({f, h, w});

  // Background: drifting sinusoid mixture, rescaled to [-1, 1].
  Prng bg_rng(spec.seed, Prng::key(index, 1));
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> waves(static_cast<size_t>(spec.n_waves));
  for (auto& wv : waves) {
    const double cycles = 0.5 + 1.5 * bg_rng.uniform();
    const double theta = 2.0 * std::numbers::pi * bg_rng.uniform();
    wv.kx = 2.0 * std::numbers::pi * cycles * std::cos(theta) / w;
    wv.ky = 2.0 * std::numbers::pi * cycles * std::sin(theta) / h;
    wv.phase = 2.0 * std::numbers::pi * bg_rng.uniform();
    wv.amp = 0.5 + 0.5 * bg_rng.uniform();
  }
  double peak = 0.0;
  for (int fi = 0; fi < f; ++fi) {
    double* plane_ptr = tr.target.data() + fi * plane;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = 0.0;
        for (const auto& wv : waves)
          v += wv.amp * std::sin(wv.kx * (x + spec.drift_x * fi) + wv.ky * (y + spec.drift_y * fi) +
                                 wv.phase);
        plane_ptr[static_cast<int64_t>(y) * w + x] = v;
        peak = std::max(peak, std::fabs(v));
      }
  }
  if (peak > 1e-9)
    for (int64_t i = 0; i < tr.target.numel(); ++i) tr.target[i] /= peak;

  // Blob: Gaussian bump on a linear path, painted toward blob_amp.
  Prng blob_rng(spec.seed, Prng::key(index, 2));
  double radius;
  if (spec.variant == BlobVariant::Large) {
    const double lo = 0.5 * std::min(h, w), hi = 0.7 * std::min(h, w);
    radius = lo + (hi - lo) * blob_rng.uniform();
  } else {
    radius = spec.radius_min + (spec.radius_max - spec.radius_min) * blob_rng.uniform();
  }
  auto draw_point = [&](double lo_frac, double hi_frac, int extent) {
    return (lo_frac + (hi_frac - lo_frac) * blob_rng.uniform()) * (extent - 1);
  };
  const double x0 = draw_point(0.25, 0.75, w), y0 = draw_point(0.25, 0.75, h);
  const double x1 = draw_point(0.25, 0.75, w), y1 = draw_point(0.25, 0.75, h);

  tr.source = Tensor({f, h, w});
  tr.mask = Tensor({f, h, w});
  for (int fi = 0; fi < f; ++fi) {
    const double s = (f == 1) ? 0.0 : static_cast<double>(fi) / (f - 1);
    const double cx = x0 + s * (x1 - x0), cy = y0 + s * (y1 - y0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int64_t at = fi * plane + static_cast<int64_t>(y) * w + x;
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double wgt = std::exp(-d2 / (2.0 * radius * radius));
        tr.source[at] = tr.target[at] + wgt * spec.blob_amp;
        tr.mask[at] = wgt > kMaskThreshold ? 1.0 : 0.0;
      }
  }
  return tr;
}

std::string triplet_index_prefix(const std::string& dir, uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04llu", static_cast<unsigned long long>(index));
  return dir + "/" + buf;
}

void write_dataset(const std::string& dir, const GenSpec& spec, int count) {
  if (count < 1) throw std::invalid_argument("write_dataset: count must be >= 1");
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir + "/manifest.txt");
  if (!manifest) throw std::runtime_error("write_dataset: cannot write manifest in " + dir);
  for (int i = 0; i < count; ++i) {
    const RemovalTriplet tr = generate_triplet(spec, static_cast<uint64_t>(i));
    const std::string prefix = triplet_index_prefix(dir, static_cast<uint64_t>(i));
    write_tensor(prefix + "_src.brt", tr.source);
    write_tensor(prefix + "_tgt.brt", tr.target);
    write_tensor(prefix + "_mask.brt", tr.mask);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d\n", i);
    manifest << buf;
  }
}

RemovalTriplet load_triplet_files(const std::string& prefix) {
  RemovalTriplet tr;
  tr.source = read_tensor(prefix + "_src.brt");
  tr.target = read_tensor(prefix + "_tgt.brt");
  tr.mask = read_tensor(prefix + "_mask.brt");
  if (!tr.source.same_shape(tr.target) || !tr.source.same_shape(tr.mask))
    throw format_error("triplet: member shapes disagree at " + prefix);
  return tr;
}

std::vector<RemovalTriplet> load_dataset(const std::string& dir) {
  std::ifstream manifest(dir + "/manifest.txt");
  if (!manifest) throw std::runtime_error("dataset: missing manifest in " + dir);
  std::vector<RemovalTriplet> out;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const uint64_t idx = std::stoull(line);
    out.push_back(load_triplet_files(triplet_index_prefix(dir, idx)));
  }
  if (out.empty()) throw std::runtime_error("dataset: empty manifest in " + dir);
  return out;
}

}  // namespace maskbridge
