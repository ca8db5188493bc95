// Command-line front end: dataset generation, training, sampling, evaluation,
// and the closed-form verification battery.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 verification
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maskbridge/baseline.hpp"
#include "maskbridge/checkpoint.hpp"
#include "maskbridge/config.hpp"
#include "maskbridge/data.hpp"
#include "maskbridge/metrics.hpp"
#include "maskbridge/model.hpp"
#include "maskbridge/rng.hpp"
#include "maskbridge/sampler.hpp"
#include "maskbridge/tensor_io.hpp"
#include "maskbridge/training.hpp"
#include "maskbridge/verify.hpp"

namespace {

using namespace maskbridge;

struct Overrides {
  std::optional<std::string> paradigm, dataset_dir, checkpoint;
  std::optional<double> beta_min, beta_max, lr, weight_decay, t_clamp_hi;
  std::optional<int> batch_size, total_steps, steps_infer, frames, height, width;
  std::optional<uint64_t> seed;
  std::optional<bool> normalized, amm_enabled;

  void apply(Config& cfg) const {
    if (paradigm) cfg.paradigm = *paradigm;
    if (dataset_dir) cfg.dataset_dir = *dataset_dir;
    if (checkpoint) cfg.checkpoint = *checkpoint;
    if (beta_min) cfg.beta_min = *beta_min;
    if (beta_max) cfg.beta_max = *beta_max;
    if (lr) cfg.lr = *lr;
    if (weight_decay) cfg.weight_decay = *weight_decay;
    if (t_clamp_hi) cfg.t_clamp_hi = *t_clamp_hi;
    if (batch_size) cfg.batch_size = *batch_size;
    if (total_steps) cfg.total_steps = *total_steps;
    if (steps_infer) cfg.steps_infer = *steps_infer;
    if (frames) cfg.frames = *frames;
    if (height) cfg.height = *height;
    if (width) cfg.width = *width;
    if (seed) cfg.seed = *seed;
    if (normalized) cfg.normalized = *normalized;
    if (amm_enabled) cfg.amm_enabled = *amm_enabled;
  }
};

struct CommonArgs {
  std::string config_path;
  Overrides ov;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key=value config file");
  cmd->add_option("--paradigm", args.ov.paradigm, "bridge | diffusion");
  cmd->add_option("--dataset-dir", args.ov.dataset_dir, "triplet dataset directory");
  cmd->add_option("--checkpoint", args.ov.checkpoint, "model checkpoint path");
  cmd->add_option("--beta-min", args.ov.beta_min, "schedule beta_min");
  cmd->add_option("--beta-max", args.ov.beta_max, "schedule beta_max");
  cmd->add_option("--lr", args.ov.lr, "learning rate");
  cmd->add_option("--weight-decay", args.ov.weight_decay, "decoupled weight decay");
  cmd->add_option("--t-clamp-hi", args.ov.t_clamp_hi, "upper clamp for sampled/evaluated t");
  cmd->add_option("--batch-size", args.ov.batch_size, "training batch size");
  cmd->add_option("--total-steps", args.ov.total_steps, "training steps");
  cmd->add_option("--steps-infer", args.ov.steps_infer, "inference steps");
  cmd->add_option("--seed", args.ov.seed, "PRNG seed");
  cmd->add_option("--F", args.ov.frames, "frames per clip");
  cmd->add_option("--H", args.ov.height, "clip height");
  cmd->add_option("--W", args.ov.width, "clip width");
  cmd->add_flag("--normalized,!--raw", args.ov.normalized, "normalized variance clock (default on)");
  cmd->add_flag("--amm,!--no-amm", args.ov.amm_enabled, "adaptive mask modulation branch");
}

Config make_config(const CommonArgs& args) {
  Config cfg = args.config_path.empty() ? Config{} : Config::from_file(args.config_path);
  args.ov.apply(cfg);
  return cfg;
}

GenSpec spec_from(const Config& cfg, const std::string& variant) {
  GenSpec spec;
  spec.frames = cfg.frames;
  spec.height = cfg.height;
  spec.width = cfg.width;
  spec.seed = cfg.seed;
  spec.variant = variant == "large" ? BlobVariant::Large : BlobVariant::Normal;
  return spec;
}

int cmd_gen_data(const CommonArgs& args, int count, const std::string& variant) {
  const Config cfg = make_config(args);
  write_dataset(cfg.dataset_dir, spec_from(cfg, variant), count);
  std::printf("wrote %d triplets to %s\n", count, cfg.dataset_dir.c_str());
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const Config cfg = make_config(args);
  const auto dataset = load_dataset(cfg.dataset_dir);
  const NoiseSchedule sched = cfg.schedule();
  const TrainConfig tc = cfg.train_config();
  const TrainResult res = train(dataset, cfg.model_shape(), tc, sched);
  save_checkpoint(cfg.checkpoint, res.params);
  const std::string csv = cfg.checkpoint + ".loss.csv";
  write_loss_csv(csv, res.curve);
  std::printf("trained %d steps (%s); checkpoint %s, loss curve %s, final loss %.6g\n",
              tc.total_steps, cfg.paradigm.c_str(), cfg.checkpoint.c_str(), csv.c_str(),
              res.curve.empty() ? 0.0 : res.curve.back().loss);
  return 0;
}

struct SampleInput {
  std::string prefix;  // file prefix for _src/_tgt/_mask
  std::string id;      // metrics row id
  uint64_t seed;
};

SampleInput resolve_input(const Config& cfg, const std::string& input) {
  SampleInput si;
  if (!input.empty() && input.find_first_not_of("0123456789") == std::string::npos) {
    const uint64_t idx = std::stoull(input);
    si.prefix = triplet_index_prefix(cfg.dataset_dir, idx);
    si.id = si.prefix.substr(si.prefix.find_last_of('/') + 1);
    si.seed = Prng::key(cfg.seed, idx);
  } else {
    si.prefix = input;
    si.id = input;
    si.seed = cfg.seed;
  }
  return si;
}

int cmd_sample(const CommonArgs& args, const std::string& input, const std::string& metrics_path,
               bool deterministic) {
  const Config cfg = make_config(args);
  const ModelParams params = load_checkpoint(cfg.checkpoint);
  const SampleInput si = resolve_input(cfg, input);
  const RemovalTriplet triplet = load_triplet_files(si.prefix);
  if (params.shape.frames != static_cast<int>(triplet.source.dim(0)))
    throw std::runtime_error("sample: checkpoint expects F=" +
                             std::to_string(params.shape.frames) + " but dataset clip has F=" +
                             std::to_string(triplet.source.dim(0)));

  Tensor out;
  if (cfg.paradigm == "diffusion") {
    const DiffusionSchedule d = DiffusionSchedule::linear();
    out = ddim_sample(params, triplet.source, triplet.mask, cfg.steps_infer, d, si.seed);
  } else {
    const NoiseSchedule sched = cfg.schedule();
    SamplerConfig sc;
    sc.steps = cfg.steps_infer;
    sc.t_clamp = cfg.t_clamp_hi;
    sc.stochastic = !deterministic;
    sc.seed = si.seed;
    const VelocityFn model = [&](const Tensor& z, double t) {
      return forward(params, z, t, triplet.source, triplet.mask);
    };
    out = sample(model, triplet.source, sc, sched);
  }

  const std::string out_path = si.prefix + "_out.brt";
  write_tensor(out_path, out);

  const EvalReport report = evaluate(out, triplet);
  const std::string mpath =
      metrics_path.empty() ? cfg.dataset_dir + "/metrics.csv" : metrics_path;
  const bool fresh = !std::filesystem::exists(mpath);
  std::ofstream ms(mpath, std::ios::app);
  if (!ms) throw std::runtime_error("sample: cannot open metrics file " + mpath);
  if (fresh) ms << eval_csv_header() << "\n";
  ms << eval_csv_row(si.id, cfg.steps_infer, report) << "\n";
  std::printf("wrote %s; metrics appended to %s\n", out_path.c_str(), mpath.c_str());
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& out_csv) {
  const Config cfg = make_config(args);
  std::ifstream manifest(cfg.dataset_dir + "/manifest.txt");
  if (!manifest) throw std::runtime_error("eval: missing manifest in " + cfg.dataset_dir);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_csv.empty()) {
    file.open(out_csv);
    if (!file) throw std::runtime_error("eval: cannot open " + out_csv);
    os = &file;
  }
  (*os) << eval_csv_header() << "\n";
  std::string line;
  int evaluated = 0;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const uint64_t idx = std::stoull(line);
    const std::string prefix = triplet_index_prefix(cfg.dataset_dir, idx);
    if (!std::filesystem::exists(prefix + "_out.brt")) continue;
    const RemovalTriplet triplet = load_triplet_files(prefix);
    const Tensor out = read_tensor(prefix + "_out.brt");
    (*os) << eval_csv_row(prefix.substr(prefix.find_last_of('/') + 1), cfg.steps_infer,
                          evaluate(out, triplet))
          << "\n";
    ++evaluated;
  }
  if (evaluated == 0) throw std::runtime_error("eval: no *_out.brt outputs found in " + cfg.dataset_dir);
  return 0;
}

int cmd_verify(const CommonArgs& args, const std::vector<std::string>& only) {
  const Config cfg = make_config(args);
  const auto results = run_verification(cfg.schedule(), only);
  if (results.empty()) {
    std::fprintf(stderr, "verify: no checks match the --only filter\n");
    return 1;
  }
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%s\n", format_check_line(r).c_str());
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mask-conditioned object removal via stochastic bridge translation"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, sample_args, eval_args, verify_args;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic removal-triplet dataset");
  add_common(gen, gen_args);
  int gen_count = 64;
  std::string gen_variant = "normal";
  gen->add_option("--count", gen_count, "number of triplets");
  gen->add_option("--variant", gen_variant, "normal | large")
      ->check(CLI::IsMember({"normal", "large"}));

  auto* tr = app.add_subcommand("train", "train the selected paradigm on a dataset");
  add_common(tr, train_args);

  auto* smp = app.add_subcommand("sample", "run inference on one input and record metrics");
  add_common(smp, sample_args);
  std::string sample_input, sample_metrics;
  bool sample_det = false;
  smp->add_option("--input", sample_input, "dataset index or triplet file prefix")->required();
  smp->add_option("--steps", sample_args.ov.steps_infer, "inference steps (alias of --steps-infer)");
  smp->add_option("--metrics", sample_metrics, "metrics CSV path (default <dataset>/metrics.csv)");
  smp->add_flag("--deterministic", sample_det, "disable the solver noise term");

  auto* ev = app.add_subcommand("eval", "evaluate existing *_out.brt files against their triplets");
  add_common(ev, eval_args);
  std::string eval_out;
  ev->add_option("--out", eval_out, "write the metrics CSV here instead of stdout");

  auto* vf = app.add_subcommand("verify", "run the closed-form verification battery");
  add_common(vf, verify_args);
  std::vector<std::string> verify_only;
  vf->add_option("--only", verify_only, "run only checks whose name contains this substring");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_args, gen_count, gen_variant);
    if (tr->parsed()) return cmd_train(train_args);
    if (smp->parsed()) return cmd_sample(sample_args, sample_input, sample_metrics, sample_det);
    if (ev->parsed()) return cmd_eval(eval_args, eval_out);
    if (vf->parsed()) return cmd_verify(verify_args, verify_only);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
