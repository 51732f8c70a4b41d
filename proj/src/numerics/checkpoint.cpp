#include "wgsum/numerics/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>

namespace wgsum {
namespace {

constexpr char kMagic[8] = {'W', 'G', 'S', 'U', 'M', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    buf_.append(static_cast<const char*>(data), n);
  }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void matrix_data(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m(i));
  }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw CheckpointError("checkpoint integrity error: truncated file");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  Matrix matrix(std::uint64_t rows, std::uint64_t cols) {
    if (rows != 0 && cols > (data_.size() / 8) / rows) {
      throw CheckpointError("checkpoint integrity error: implausible matrix shape");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = f64();
    return m;
  }
  std::size_t position() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::string* Checkpoint::find_metadata(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u64(ck.config_hash);
  w.u32(static_cast<std::uint32_t>(ck.metadata.size()));
  for (const auto& [k, v] : ck.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(ck.parameters.size()));
  for (const auto& p : ck.parameters) {
    w.str(p.name);
    w.u64(static_cast<std::uint64_t>(p.value.rows()));
    w.u64(static_cast<std::uint64_t>(p.value.cols()));
    w.matrix_data(p.value);
  }
  w.u8(ck.optimizer ? 1 : 0);
  if (ck.optimizer) {
    const AdamState& s = *ck.optimizer;
    if (!s.first_moment.empty() && s.first_moment.size() != ck.parameters.size()) {
      throw CheckpointError("optimizer state does not match parameter count");
    }
    w.u64(static_cast<std::uint64_t>(s.step));
    w.f64(s.config.learning_rate);
    w.f64(s.config.beta1);
    w.f64(s.config.beta2);
    w.f64(s.config.epsilon);
    w.u8(s.first_moment.empty() ? 0 : 1);
    for (std::size_t i = 0; i < s.first_moment.size(); ++i) {
      w.matrix_data(s.first_moment[i]);
      w.matrix_data(s.second_moment[i]);
    }
  }
  std::string out = w.buffer();
  Writer trailer;
  trailer.u64(fnv1a64(out));
  out += trailer.buffer();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("failed writing checkpoint: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint: " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (data.size() < sizeof kMagic + 4 + 8 + 8 ||
      std::string_view(data).substr(0, sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
    throw CheckpointError("checkpoint integrity error: bad header in " + path.string());
  }
  const std::string_view body(data.data(), data.size() - 8);
  Reader tail(std::string_view(data).substr(data.size() - 8));
  if (tail.u64() != fnv1a64(body)) {
    throw CheckpointError("checkpoint integrity error: checksum mismatch in " + path.string());
  }

  Reader r(body);
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config_hash = r.u64();
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    std::string v = r.str();
    ck.metadata.emplace_back(std::move(k), std::move(v));
  }
  const std::uint32_t n_params = r.u32();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    NamedMatrix p;
    p.name = r.str();
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    p.value = r.matrix(rows, cols);
    ck.parameters.push_back(std::move(p));
  }
  if (r.u8() != 0) {
    AdamState s;
    s.step = static_cast<std::int64_t>(r.u64());
    s.config.learning_rate = r.f64();
    s.config.beta1 = r.f64();
    s.config.beta2 = r.f64();
    s.config.epsilon = r.f64();
    if (r.u8() != 0) {
      for (const auto& p : ck.parameters) {
        s.first_moment.push_back(r.matrix(static_cast<std::uint64_t>(p.value.rows()),
                                          static_cast<std::uint64_t>(p.value.cols())));
        s.second_moment.push_back(r.matrix(static_cast<std::uint64_t>(p.value.rows()),
                                           static_cast<std::uint64_t>(p.value.cols())));
      }
    }
    ck.optimizer = std::move(s);
  }
  if (r.position() != body.size()) {
    throw CheckpointError("checkpoint integrity error: trailing bytes in " + path.string());
  }
  return ck;
}

void restore_parameters(const Checkpoint& ck, ParameterStore& store) {
  if (ck.parameters.size() != store.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(ck.parameters.size()) +
                          " parameters, model expects " + std::to_string(store.size()));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store[i];
    const NamedMatrix& saved = ck.parameters[i];
    if (saved.name != p.name || saved.value.rows() != p.value.rows() ||
        saved.value.cols() != p.value.cols()) {
      throw CheckpointError("checkpoint parameter " + saved.name + " " +
                            shape_string(saved.value) + " does not match model parameter " +
                            p.name + " " + shape_string(p.value));
    }
    p.value = saved.value;
  }
}

std::vector<NamedMatrix> snapshot_parameters(const ParameterStore& store) {
  std::vector<NamedMatrix> out;
  out.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) out.push_back({store[i].name, store[i].value});
  return out;
}

}  // namespace wgsum
