#include "maskbridge/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace maskbridge {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw format_error("checkpoint: truncated header field");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float f) {
  uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(os, u);
}

float get_f32(std::istream& is) {
  const uint32_t u = get_u32(is);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

void write_tensor_record(std::ostream& os, const std::string& name, const Tensor& t) {
  put_u32(os, static_cast<uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(os, static_cast<uint32_t>(t.ndim()));
  for (int i = 0; i < t.ndim(); ++i) put_u32(os, static_cast<uint32_t>(t.dim(i)));
  for (int64_t i = 0; i < t.numel(); ++i) put_f32(os, static_cast<float>(t[i]));
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  os.write("BRW1", 4);
  for (const auto& [name, t] : p.named_tensors()) write_tensor_record(os, name, *t);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "BRW1", 4) != 0) throw format_error("checkpoint: bad magic");

  std::map<std::string, Tensor> recs;
  while (true) {
    is.peek();
    if (is.eof()) break;
    const uint32_t name_len = get_u32(is);
    if (name_len == 0 || name_len > 256) throw format_error("checkpoint: bad name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw format_error("checkpoint: truncated name");
    const uint32_t ndim = get_u32(is);
    if (ndim == 0 || ndim > 8) throw format_error("checkpoint: bad rank");
    std::vector<int64_t> dims(ndim);
    for (auto& d : dims) d = static_cast<int64_t>(get_u32(is));
    Tensor t(dims);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(get_f32(is));
    recs.emplace(std::move(name), std::move(t));
  }

  auto take = [&](const char* name) {
    auto it = recs.find(name);
    if (it == recs.end()) throw format_error(std::string("checkpoint: missing tensor ") + name);
    Tensor t = std::move(it->second);
    recs.erase(it);
    return t;
  };

  ModelParams p;
  p.conv1_w = take("conv1_w");
  p.conv1_b = take("conv1_b");
  p.conv2_w = take("conv2_w");
  p.conv2_b = take("conv2_b");
  p.conv_out_w = take("conv_out_w");
  p.conv_out_b = take("conv_out_b");
  p.time_w = take("time_w");
  p.time_b = take("time_b");
  if (p.conv1_w.ndim() != 4 || p.conv1_w.dim(1) % 3 != 0)
    throw format_error("checkpoint: conv1_w has unexpected shape");
  p.shape.hidden = static_cast<int>(p.conv1_w.dim(0));
  p.shape.frames = static_cast<int>(p.conv1_w.dim(1) / 3);
  p.shape.time_dim = static_cast<int>(p.time_w.dim(1));
  p.shape.amm_enabled = recs.count("amm_embed_w") > 0;
  if (p.shape.amm_enabled) {
    p.amm_embed_w = take("amm_embed_w");
    p.amm_embed_b = take("amm_embed_b");
    p.amm_gamma_w = take("amm_gamma_w");
    p.amm_gamma_b = take("amm_gamma_b");
    p.amm_beta_w = take("amm_beta_w");
    p.amm_beta_b = take("amm_beta_b");
    p.shape.amm_channels = static_cast<int>(p.amm_embed_w.dim(0));
  } else {
    const ModelShape s = p.shape;
    p.amm_embed_w = Tensor({s.amm_channels, s.frames, 3, 3});
    p.amm_embed_b = Tensor({s.amm_channels});
    p.amm_gamma_w = Tensor({s.hidden, s.amm_channels});
    p.amm_gamma_b = Tensor({s.hidden});
    p.amm_beta_w = Tensor({s.hidden, s.amm_channels});
    p.amm_beta_b = Tensor({s.hidden});
  }
  if (!recs.empty()) throw format_error("checkpoint: unexpected tensor " + recs.begin()->first);
  return p;
}

}  // namespace maskbridge
