#include "maskbridge/training.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "maskbridge/bridge.hpp"
#include "maskbridge/kernels.hpp"
#include "maskbridge/rng.hpp"

namespace maskbridge {

void adamw_step(ModelParams& p, const Gradients& g, OptimState& o, const TrainConfig& cfg) {
  o.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(o.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(o.step));
  auto pt = p.named_tensors();
  auto gt = const_cast<Gradients&>(g).named_tensors();
  auto mt = o.m.named_tensors();
  auto vt = o.v.named_tensors();
  for (size_t i = 0; i < pt.size(); ++i) {
    kernels::active().adamw(pt[i].second->data(), mt[i].second->data(), vt[i].second->data(),
                            gt[i].second->data(), static_cast<size_t>(pt[i].second->numel()),
                            cfg.lr, cfg.beta1, cfg.beta2, cfg.eps_adam, cfg.weight_decay, bc1, bc2);
  }
}

double bridge_loss(const ModelParams& p, const RemovalTriplet& triplet, double t, const Tensor& eps,
                   const NoiseSchedule& s) {
  TrainSample smp;
  smp.slot = 0;
  smp.z_in = interpolate(triplet.target, triplet.source, t, eps, s);
  smp.t_net = t;
  smp.cond_src = &triplet.source;
  smp.cond_mask = &triplet.mask;
  smp.target = velocity_target(triplet.target, eps, t, s);
  return batch_loss(p, std::span<const TrainSample>(&smp, 1));
}

namespace {

TrainSample make_sample(int slot, const std::vector<RemovalTriplet>& dataset,
                        const TrainConfig& cfg, const NoiseSchedule& s,
                        const DiffusionSchedule* dsched, int step) {
  Prng rng(cfg.seed, Prng::key(static_cast<uint64_t>(step), static_cast<uint64_t>(slot)));
  const RemovalTriplet& tr = dataset[rng.uniform_index(dataset.size())];

  TrainSample smp;
  smp.slot = slot;
  smp.cond_src = &tr.source;
  smp.cond_mask = &tr.mask;
  Tensor eps = rng.normal_tensor(tr.target.dims());
  if (cfg.loss_kind == LossKind::BridgeVelocity) {
    const double t = rng.uniform() * cfg.t_clamp_hi;
    smp.z_in = interpolate(tr.target, tr.source, t, eps, s);
    smp.target = velocity_target(tr.target, eps, t, s);
    smp.t_net = t;
  } else {
    const int i = 1 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(dsched->T)));
    smp.z_in = diffusion_forward_sample(tr.target, i, eps, *dsched);
    smp.target = std::move(eps);
    smp.t_net = static_cast<double>(i) / dsched->T;
  }
  return smp;
}

}  // namespace

TrainResult train(const std::vector<RemovalTriplet>& dataset, const ModelShape& shape,
                  const TrainConfig& cfg, const NoiseSchedule& s, const DiffusionSchedule* dsched) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  DiffusionSchedule fallback;
  if (cfg.loss_kind == LossKind::DiffusionNoise && !dsched) {
    fallback = DiffusionSchedule::linear();
    dsched = &fallback;
  }

  TrainResult res;
  res.params = ModelParams::init(shape, cfg.seed);
  OptimState opt = OptimState::zeros_like(res.params);
  res.curve.reserve(static_cast<size_t>(cfg.total_steps));

  std::vector<TrainSample> batch;
  for (int step = 0; step < cfg.total_steps; ++step) {
    batch.clear();
    for (int slot = 0; slot < cfg.batch_size; ++slot)
      batch.push_back(make_sample(slot, dataset, cfg, s, dsched, step));

    Gradients g = ModelParams::zeros_like(res.params);
    double loss;
    try {
      loss = backward(res.params, batch, g);
    } catch (const std::runtime_error&) {
      throw divergence_error(step);
    }
    if (!std::isfinite(loss) || loss > 1e6) throw divergence_error(step);
    adamw_step(res.params, g, opt, cfg);
    res.curve.push_back({step, loss});
  }
  return res;
}

void write_loss_csv(const std::string& path, const std::vector<LossPoint>& curve) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("loss csv: cannot open for writing: " + path);
  os << "step,loss\n";
  for (const auto& pt : curve) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", pt.step, pt.loss);
    os << buf;
  }
}

}  // namespace maskbridge
