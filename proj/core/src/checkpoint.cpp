#include "simple/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "simple/errors.hpp"

namespace simple {

namespace {

constexpr char kMagic[8] = {'S', 'M', 'P', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& buf, double v) {
  put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

void put_string(std::vector<unsigned char>& buf, const std::string& s) {
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("checkpoint: name too long");
  }
  put_u32(buf, static_cast<std::uint32_t>(s.size()));
  buf.insert(buf.end(), s.begin(), s.end());
}

void put_param_section(std::vector<unsigned char>& buf, const ParamSet& set) {
  put_u32(buf, static_cast<std::uint32_t>(set.count()));
  for (const auto& p : set.items()) {
    put_string(buf, p.name);
    put_u32(buf, static_cast<std::uint32_t>(p.value.ndim()));
    for (std::size_t d : p.value.shape()) put_u64(buf, d);
    for (double v : p.value.data()) put_f64(buf, v);
  }
}

// Cursor over an in-memory file image. Every read is bounds-checked so a
// truncated file fails loudly instead of reading garbage.
class Reader {
 public:
  Reader(const unsigned char* data, std::size_t size) : p_(data), n_(size) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p_[off_ + i]) << (8 * i);
    off_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p_[off_ + i]) << (8 * i);
    off_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(p_ + off_), len);
    off_ += len;
    return s;
  }

  void raw(char* dst, std::size_t len) {
    need(len);
    std::memcpy(dst, p_ + off_, len);
    off_ += len;
  }

  bool done() const { return off_ == n_; }

 private:
  void need(std::size_t k) {
    if (n_ - off_ < k) throw FormatError("checkpoint: truncated file");
  }
  const unsigned char* p_;
  std::size_t n_;
  std::size_t off_ = 0;
};

ParamSet read_param_section(Reader& r) {
  ParamSet set;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint32_t ndim = r.u32();
    if (ndim > 8) throw FormatError("checkpoint: implausible tensor rank");
    std::vector<std::size_t> shape(ndim);
    std::size_t total = 1;
    for (auto& d : shape) {
      const std::uint64_t v = r.u64();
      if (v == 0 || v > (1ull << 32)) {
        throw FormatError("checkpoint: implausible dimension");
      }
      d = static_cast<std::size_t>(v);
      total *= d;
    }
    std::vector<double> values(total);
    for (auto& v : values) v = r.f64();
    set.add(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  return set;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::vector<unsigned char> buf;
  buf.reserve(64 + 8 * (ck.params.scalar_count() + ck.ema.scalar_count()));
  buf.insert(buf.end(), kMagic, kMagic + 8);
  put_u32(buf, kFormatVersion);
  put_u64(buf, ck.config_digest);
  put_u64(buf, ck.step);

  put_u32(buf, static_cast<std::uint32_t>(ck.rng_streams.size()));
  for (const auto& s : ck.rng_streams) {
    put_string(buf, s.name);
    put_u64(buf, s.key);
    put_u64(buf, s.counter);
  }

  put_param_section(buf, ck.params);
  put_param_section(buf, ck.ema);

  put_u32(buf, static_cast<std::uint32_t>(ck.opt_state.size()));
  for (const auto& b : ck.opt_state) {
    put_string(buf, b.name);
    put_u64(buf, b.values.size());
    for (double v : b.values) put_f64(buf, v);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open: " + path);
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<unsigned char> buf(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(buf.data()), size);
  if (!in) throw IoError("read failed: " + path);

  Reader r(buf.data(), buf.size());
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("not a checkpoint file: " + path);
  }
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }

  Checkpoint ck;
  ck.config_digest = r.u64();
  ck.step = r.u64();

  const std::uint32_t n_rng = r.u32();
  ck.rng_streams.resize(n_rng);
  for (auto& s : ck.rng_streams) {
    s.name = r.str();
    s.key = r.u64();
    s.counter = r.u64();
  }

  ck.params = read_param_section(r);
  ck.ema = read_param_section(r);

  const std::uint32_t n_opt = r.u32();
  ck.opt_state.resize(n_opt);
  for (auto& b : ck.opt_state) {
    b.name = r.str();
    const std::uint64_t len = r.u64();
    b.values.resize(static_cast<std::size_t>(len));
    for (auto& v : b.values) v = r.f64();
  }

  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return ck;
}

}  // namespace simple
