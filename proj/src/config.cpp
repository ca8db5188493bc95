#include "maskbridge/config.hpp"

#include <fstream>
#include <stdexcept>

namespace maskbridge {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

}  // namespace

void Config::apply_kv(const std::string& key, const std::string& value) {
  try {
    if (key == "beta_min") beta_min = std::stod(value);
    else if (key == "beta_max") beta_max = std::stod(value);
    else if (key == "normalized") normalized = parse_bool(value, key);
    else if (key == "paradigm") {
      if (value != "bridge" && value != "diffusion")
        throw std::invalid_argument("config: paradigm must be bridge or diffusion");
      paradigm = value;
    } else if (key == "lr") lr = std::stod(value);
    else if (key == "weight_decay") weight_decay = std::stod(value);
    else if (key == "batch_size") batch_size = std::stoi(value);
    else if (key == "total_steps") total_steps = std::stoi(value);
    else if (key == "steps_infer") steps_infer = std::stoi(value);
    else if (key == "t_clamp_hi") t_clamp_hi = std::stod(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "F") frames = std::stoi(value);
    else if (key == "H") height = std::stoi(value);
    else if (key == "W") width = std::stoi(value);
    else if (key == "dataset_dir") dataset_dir = value;
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "amm_enabled") amm_enabled = parse_bool(value, key);
    else throw std::invalid_argument("config: unknown key: " + key);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad value for " + key + ": " + value);
  }
}

Config Config::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not key=value");
    cfg.apply_kv(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

TrainConfig Config::train_config() const {
  TrainConfig tc;
  tc.lr = lr;
  tc.weight_decay = weight_decay;
  tc.batch_size = batch_size;
  tc.total_steps = total_steps;
  tc.t_clamp_hi = t_clamp_hi;
  tc.seed = seed;
  tc.loss_kind = paradigm == "diffusion" ? LossKind::DiffusionNoise : LossKind::BridgeVelocity;
  return tc;
}

}  // namespace maskbridge
