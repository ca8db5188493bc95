#include "maskbridge/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "maskbridge/kernels.hpp"
#include "maskbridge/rng.hpp"

namespace maskbridge {

namespace {

Tensor randn_scaled(Prng& rng, std::vector<int64_t> dims, double scale) {
  Tensor t(std::move(dims));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

// din = transpose-conv of dout through w: reuse the forward kernel with
// flipped, channel-swapped weights.
void conv3x3_input_grad(Tensor& din, const Tensor& dout, const Tensor& w, int cin, int cout, int h,
                        int wd) {
  thread_local std::vector<double> wt;
  wt.resize(static_cast<size_t>(cin) * cout * 9);
  for (int oc = 0; oc < cout; ++oc)
    for (int ic = 0; ic < cin; ++ic)
      for (int k = 0; k < 9; ++k)
        wt[(static_cast<size_t>(ic) * cout + oc) * 9 + (8 - k)] =
            w[(static_cast<int64_t>(oc) * cin + ic) * 9 + k];
  kernels::active().conv3x3(din.data(), dout.data(), wt.data(), nullptr, cout, cin, h, wd);
}

void conv1x1(Tensor& out, const Tensor& in, const Tensor& w, const Tensor& b, int cin, int cout,
             int64_t plane) {
  for (int oc = 0; oc < cout; ++oc) {
    double* op = out.data() + oc * plane;
    std::fill(op, op + plane, b[oc]);
    for (int ic = 0; ic < cin; ++ic) {
      const double wv = w[static_cast<int64_t>(oc) * cin + ic];
      const double* ip = in.data() + ic * plane;
      for (int64_t i = 0; i < plane; ++i) op[i] += wv * ip[i];
    }
  }
}

void conv1x1_wgrad(Tensor& dw, Tensor& db, const Tensor& in, const Tensor& dout, int cin, int cout,
                   int64_t plane) {
  for (int oc = 0; oc < cout; ++oc) {
    const double* dp = dout.data() + oc * plane;
    double bsum = 0.0;
    for (int64_t i = 0; i < plane; ++i) bsum += dp[i];
    db[oc] += bsum;
    for (int ic = 0; ic < cin; ++ic) {
      const double* ip = in.data() + ic * plane;
      double acc = 0.0;
      for (int64_t i = 0; i < plane; ++i) acc += dp[i] * ip[i];
      dw[static_cast<int64_t>(oc) * cin + ic] += acc;
    }
  }
}

void conv1x1_igrad_accum(Tensor& din, const Tensor& dout, const Tensor& w, int cin, int cout,
                         int64_t plane) {
  for (int ic = 0; ic < cin; ++ic) {
    double* dp = din.data() + ic * plane;
    for (int oc = 0; oc < cout; ++oc) {
      const double wv = w[static_cast<int64_t>(oc) * cin + ic];
      const double* op = dout.data() + oc * plane;
      for (int64_t i = 0; i < plane; ++i) dp[i] += wv * op[i];
    }
  }
}

struct Workspace {
  Tensor x;       // concat(z_t, z_src, mask), [3F][H][W]
  Tensor h1;      // conv1 output incl. time bias, pre-AMM
  Tensor gamma, beta, mfeat;
  Tensor a1, a2;  // tanh activations
  Tensor out;
  std::vector<double> temb;
};

void check_spatial(const ModelParams& p, const Tensor& t, const char* what) {
  if (t.ndim() != 3 || t.dim(0) != p.shape.frames)
    throw std::invalid_argument(std::string(what) + ": expected [F][H][W] with F=" +
                                std::to_string(p.shape.frames));
}

void forward_ws(const ModelParams& p, const Tensor& z_t, double t, const Tensor& z_src,
                const Tensor& mask, Workspace& ws) {
  check_spatial(p, z_t, "forward");
  require_same_shape(z_t, z_src, "forward");
  require_same_shape(z_t, mask, "forward");
  if (!p.all_finite()) throw std::runtime_error("forward: non-finite parameters");

  const auto& ops = kernels::active();
  const int f = p.shape.frames, hid = p.shape.hidden, ac = p.shape.amm_channels;
  const int h = static_cast<int>(z_t.dim(1)), w = static_cast<int>(z_t.dim(2));
  const int64_t plane = static_cast<int64_t>(h) * w;

  ws.x = Tensor({3 * f, h, w});
  std::memcpy(ws.x.data(), z_t.data(), sizeof(double) * f * plane);
  std::memcpy(ws.x.data() + f * plane, z_src.data(), sizeof(double) * f * plane);
  std::memcpy(ws.x.data() + 2 * f * plane, mask.data(), sizeof(double) * f * plane);

  ws.h1 = Tensor({hid, h, w});
  ops.conv3x3(ws.h1.data(), ws.x.data(), p.conv1_w.data(), p.conv1_b.data(), 3 * f, hid, h, w);

  ws.temb = time_embedding(t, p.shape.time_dim);
  for (int c = 0; c < hid; ++c) {
    double tb = p.time_b[c];
    for (int k = 0; k < p.shape.time_dim; ++k)
      tb += p.time_w[static_cast<int64_t>(c) * p.shape.time_dim + k] * ws.temb[static_cast<size_t>(k)];
    double* row = ws.h1.data() + c * plane;
    for (int64_t i = 0; i < plane; ++i) row[i] += tb;
  }

  const Tensor* pre = &ws.h1;
  Tensor modulated;
  if (p.shape.amm_enabled) {
    ws.mfeat = Tensor({ac, h, w});
    ops.conv3x3(ws.mfeat.data(), mask.data(), p.amm_embed_w.data(), p.amm_embed_b.data(), f, ac, h, w);
    ws.gamma = Tensor({hid, h, w});
    ws.beta = Tensor({hid, h, w});
    conv1x1(ws.gamma, ws.mfeat, p.amm_gamma_w, p.amm_gamma_b, ac, hid, plane);
    conv1x1(ws.beta, ws.mfeat, p.amm_beta_w, p.amm_beta_b, ac, hid, plane);
    modulated = Tensor({hid, h, w});
    ops.film(modulated.data(), ws.h1.data(), ws.gamma.data(), ws.beta.data(),
             static_cast<size_t>(modulated.numel()));
    pre = &modulated;
  }

  ws.a1 = Tensor({hid, h, w});
  ops.tanh_forward(ws.a1.data(), pre->data(), static_cast<size_t>(ws.a1.numel()));

  Tensor h2({hid, h, w});
  ops.conv3x3(h2.data(), ws.a1.data(), p.conv2_w.data(), p.conv2_b.data(), hid, hid, h, w);
  ws.a2 = Tensor({hid, h, w});
  ops.tanh_forward(ws.a2.data(), h2.data(), static_cast<size_t>(ws.a2.numel()));

  ws.out = Tensor({f, h, w});
  ops.conv3x3(ws.out.data(), ws.a2.data(), p.conv_out_w.data(), p.conv_out_b.data(), hid, f, h, w);
}

}  // namespace

ModelParams ModelParams::init(const ModelShape& shape, uint64_t seed) {
  ModelParams p;
  p.shape = shape;
  const int f = shape.frames, hid = shape.hidden, ac = shape.amm_channels, td = shape.time_dim;
  Prng rng(seed, 0x1417);
  // Shared tensors are drawn first so AMM on/off runs share an initialization.
  p.conv1_w = randn_scaled(rng, {hid, 3 * f, 3, 3}, 1.0 / std::sqrt(3.0 * f * 9.0));
  p.conv1_b = Tensor({hid});
  p.conv2_w = randn_scaled(rng, {hid, hid, 3, 3}, 1.0 / std::sqrt(hid * 9.0));
  p.conv2_b = Tensor({hid});
  p.conv_out_w = randn_scaled(rng, {f, hid, 3, 3}, 1.0 / std::sqrt(hid * 9.0));
  p.conv_out_b = Tensor({f});
  p.time_w = randn_scaled(rng, {hid, td}, 1.0 / std::sqrt(static_cast<double>(td)));
  p.time_b = Tensor({hid});
  p.amm_embed_w = randn_scaled(rng, {ac, f, 3, 3}, 1.0 / std::sqrt(f * 9.0));
  p.amm_embed_b = Tensor({ac});
  p.amm_gamma_w = Tensor({hid, ac});
  p.amm_gamma_b = Tensor({hid});
  p.amm_beta_w = Tensor({hid, ac});
  p.amm_beta_b = Tensor({hid});
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& p) {
  ModelParams z;
  z.shape = p.shape;
  z.conv1_w = Tensor(p.conv1_w.dims());
  z.conv1_b = Tensor(p.conv1_b.dims());
  z.conv2_w = Tensor(p.conv2_w.dims());
  z.conv2_b = Tensor(p.conv2_b.dims());
  z.conv_out_w = Tensor(p.conv_out_w.dims());
  z.conv_out_b = Tensor(p.conv_out_b.dims());
  z.time_w = Tensor(p.time_w.dims());
  z.time_b = Tensor(p.time_b.dims());
  z.amm_embed_w = Tensor(p.amm_embed_w.dims());
  z.amm_embed_b = Tensor(p.amm_embed_b.dims());
  z.amm_gamma_w = Tensor(p.amm_gamma_w.dims());
  z.amm_gamma_b = Tensor(p.amm_gamma_b.dims());
  z.amm_beta_w = Tensor(p.amm_beta_w.dims());
  z.amm_beta_b = Tensor(p.amm_beta_b.dims());
  return z;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> v = {
      {"conv1_w", &conv1_w},       {"conv1_b", &conv1_b},
      {"conv2_w", &conv2_w},       {"conv2_b", &conv2_b},
      {"conv_out_w", &conv_out_w}, {"conv_out_b", &conv_out_b},
      {"time_w", &time_w},         {"time_b", &time_b},
  };
  if (shape.amm_enabled) {
    v.emplace_back("amm_embed_w", &amm_embed_w);
    v.emplace_back("amm_embed_b", &amm_embed_b);
    v.emplace_back("amm_gamma_w", &amm_gamma_w);
    v.emplace_back("amm_gamma_b", &amm_gamma_b);
    v.emplace_back("amm_beta_w", &amm_beta_w);
    v.emplace_back("amm_beta_b", &amm_beta_b);
  }
  return v;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named_tensors()) out.emplace_back(name, t);
  return out;
}

bool ModelParams::all_finite() const {
  for (auto& [name, t] : named_tensors())
    if (!t->all_finite()) return false;
  return true;
}

int64_t ModelParams::parameter_count() const {
  int64_t n = 0;
  for (auto& [name, t] : named_tensors()) n += t->numel();
  return n;
}

std::vector<double> time_embedding(double t, int dim) {
  if (dim <= 0 || dim % 2 != 0) throw std::invalid_argument("time_embedding: dim must be even");
  const int m = dim / 2;
  std::vector<double> e(static_cast<size_t>(dim));
  for (int k = 0; k < m; ++k) {
    const double w = (m == 1) ? 1.0 : std::pow(10.0, 4.0 * k / (m - 1));
    e[static_cast<size_t>(k)] = std::sin(w * t);
    e[static_cast<size_t>(m + k)] = std::cos(w * t);
  }
  return e;
}

Tensor amm_modulate(const Tensor& h, const Tensor& mask, const ModelParams& p) {
  check_spatial(p, mask, "amm_modulate");
  const int hid = p.shape.hidden, ac = p.shape.amm_channels, f = p.shape.frames;
  const int hh = static_cast<int>(mask.dim(1)), ww = static_cast<int>(mask.dim(2));
  if (h.ndim() != 3 || h.dim(0) != hid || h.dim(1) != hh || h.dim(2) != ww)
    throw std::invalid_argument("amm_modulate: h must be [hidden][H][W]");
  const int64_t plane = static_cast<int64_t>(hh) * ww;

  Tensor mfeat({ac, hh, ww});
  kernels::active().conv3x3(mfeat.data(), mask.data(), p.amm_embed_w.data(), p.amm_embed_b.data(),
                            f, ac, hh, ww);
  Tensor gamma({hid, hh, ww}), beta({hid, hh, ww});
  conv1x1(gamma, mfeat, p.amm_gamma_w, p.amm_gamma_b, ac, hid, plane);
  conv1x1(beta, mfeat, p.amm_beta_w, p.amm_beta_b, ac, hid, plane);
  Tensor out(h.dims());
  kernels::active().film(out.data(), h.data(), gamma.data(), beta.data(),
                         static_cast<size_t>(out.numel()));
  return out;
}

Tensor forward(const ModelParams& p, const Tensor& z_t, double t, const Tensor& z_src,
               const Tensor& mask) {
  Workspace ws;
  forward_ws(p, z_t, t, z_src, mask, ws);
  return std::move(ws.out);
}

double backward(const ModelParams& p, std::span<const TrainSample> batch, Gradients& g,
                double loss_scale) {
  if (batch.empty()) throw std::invalid_argument("backward: empty batch");
  const auto& ops = kernels::active();
  const int f = p.shape.frames, hid = p.shape.hidden, ac = p.shape.amm_channels;

  // Ascending-slot processing makes the reduction order independent of the
  // order samples arrive in.
  std::vector<size_t> order(batch.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t i, size_t j) { return batch[i].slot < batch[j].slot; });

  const int64_t per_sample = batch[0].z_in.numel();
  const double denom = static_cast<double>(batch.size()) * static_cast<double>(per_sample);
  std::vector<double> slot_ssd(batch.size(), 0.0);

  Workspace ws;
  for (size_t oi = 0; oi < order.size(); ++oi) {
    const TrainSample& smp = batch[order[oi]];
    forward_ws(p, smp.z_in, smp.t_net, *smp.cond_src, *smp.cond_mask, ws);
    require_same_shape(ws.out, smp.target, "backward");
    const int h = static_cast<int>(smp.z_in.dim(1)), w = static_cast<int>(smp.z_in.dim(2));
    const int64_t plane = static_cast<int64_t>(h) * w;

    slot_ssd[oi] = ops.sum_sq_diff(ws.out.data(), smp.target.data(),
                                   static_cast<size_t>(ws.out.numel()));

    // dL/dout for L = loss_scale * mean((out - target)^2)
    Tensor dout(ws.out.dims());
    ops.mix2(dout.data(), 2.0 * loss_scale / denom, ws.out.data(), -2.0 * loss_scale / denom,
             smp.target.data(), static_cast<size_t>(dout.numel()));

    ops.conv3x3_wgrad(g.conv_out_w.data(), g.conv_out_b.data(), ws.a2.data(), dout.data(), hid, f,
                      h, w);
    Tensor da2({hid, h, w});
    conv3x3_input_grad(da2, dout, p.conv_out_w, hid, f, h, w);
    Tensor dh2({hid, h, w});
    ops.tanh_backward(dh2.data(), da2.data(), ws.a2.data(), static_cast<size_t>(dh2.numel()));

    ops.conv3x3_wgrad(g.conv2_w.data(), g.conv2_b.data(), ws.a1.data(), dh2.data(), hid, hid, h, w);
    Tensor da1({hid, h, w});
    conv3x3_input_grad(da1, dh2, p.conv2_w, hid, hid, h, w);
    Tensor dpre({hid, h, w});
    ops.tanh_backward(dpre.data(), da1.data(), ws.a1.data(), static_cast<size_t>(dpre.numel()));

    Tensor dh1;
    if (p.shape.amm_enabled) {
      dh1 = Tensor({hid, h, w});
      ops.film_backward(dh1.data(), dpre.data(), ws.gamma.data(), static_cast<size_t>(dh1.numel()));
      Tensor dgamma({hid, h, w});
      ops.mul(dgamma.data(), dpre.data(), ws.h1.data(), static_cast<size_t>(dgamma.numel()));
      // dbeta == dpre
      conv1x1_wgrad(g.amm_gamma_w, g.amm_gamma_b, ws.mfeat, dgamma, ac, hid, plane);
      conv1x1_wgrad(g.amm_beta_w, g.amm_beta_b, ws.mfeat, dpre, ac, hid, plane);
      Tensor dmfeat({ac, h, w});
      conv1x1_igrad_accum(dmfeat, dgamma, p.amm_gamma_w, ac, hid, plane);
      conv1x1_igrad_accum(dmfeat, dpre, p.amm_beta_w, ac, hid, plane);
      ops.conv3x3_wgrad(g.amm_embed_w.data(), g.amm_embed_b.data(), smp.cond_mask->data(),
                        dmfeat.data(), f, ac, h, w);
    } else {
      dh1 = std::move(dpre);
    }

    for (int c = 0; c < hid; ++c) {
      const double* row = dh1.data() + c * plane;
      double dtb = 0.0;
      for (int64_t i = 0; i < plane; ++i) dtb += row[i];
      g.time_b[c] += dtb;
      for (int k = 0; k < p.shape.time_dim; ++k)
        g.time_w[static_cast<int64_t>(c) * p.shape.time_dim + k] += dtb * ws.temb[static_cast<size_t>(k)];
    }

    ops.conv3x3_wgrad(g.conv1_w.data(), g.conv1_b.data(), ws.x.data(), dh1.data(), 3 * f, hid, h, w);
  }

  double ssd = 0.0;
  for (double v : slot_ssd) ssd += v;
  const double loss = loss_scale * ssd / denom;
  if (!std::isfinite(loss)) throw std::runtime_error("backward: non-finite loss");
  return loss;
}

double batch_loss(const ModelParams& p, std::span<const TrainSample> batch) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  std::vector<size_t> order(batch.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t i, size_t j) { return batch[i].slot < batch[j].slot; });
  double ssd = 0.0;
  int64_t per_sample = batch[0].z_in.numel();
  for (size_t oi : order) {
    const TrainSample& smp = batch[oi];
    Tensor out = forward(p, smp.z_in, smp.t_net, *smp.cond_src, *smp.cond_mask);
    ssd += kernels::active().sum_sq_diff(out.data(), smp.target.data(),
                                         static_cast<size_t>(out.numel()));
  }
  return ssd / (static_cast<double>(batch.size()) * static_cast<double>(per_sample));
}

}  // namespace maskbridge
