#include "maskbridge/tensor_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

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
  if (!is) throw format_error("tensor file: truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensor(const std::string& path, const Tensor& t) {
  if (t.ndim() == 0) throw std::invalid_argument("write_tensor: empty dims");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_tensor: cannot open " + path);
  os.write("BRT1", 4);
  put_u32(os, static_cast<uint32_t>(t.ndim()));
  for (int i = 0; i < t.ndim(); ++i) put_u32(os, static_cast<uint32_t>(t.dim(i)));
  for (int64_t i = 0; i < t.numel(); ++i) {
    const float f = static_cast<float>(t[i]);
    uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(os, u);
  }
  if (!os) throw std::runtime_error("write_tensor: write failed: " + path);
}

Tensor read_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_tensor: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "BRT1", 4) != 0) throw format_error("tensor file: bad magic");
  const uint32_t ndim = get_u32(is);
  if (ndim == 0 || ndim > 8) throw format_error("tensor file: bad rank");
  std::vector<int64_t> dims(ndim);
  uint64_t n = 1;
  for (auto& d : dims) {
    const uint32_t v = get_u32(is);
    if (v == 0) throw format_error("tensor file: zero extent");
    n *= v;
    if (n > (1ull << 32)) throw format_error("tensor file: extent product overflow");
    d = static_cast<int64_t>(v);
  }
  Tensor t(dims);
  for (int64_t i = 0; i < t.numel(); ++i) {
    const uint32_t u = get_u32(is);
    float f;
    std::memcpy(&f, &u, 4);
    t[i] = static_cast<double>(f);
  }
  // A well-formed file ends exactly after the payload.
  is.peek();
  if (!is.eof()) throw format_error("tensor file: trailing bytes");
  return t;
}

}  // namespace maskbridge
