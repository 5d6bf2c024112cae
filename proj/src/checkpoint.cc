#include "maskmem/checkpoint.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "maskmem/rng.h"

namespace maskmem {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'M', 'N', '2', 'N', 'C', 'K', 'P'};

enum Flag : std::uint32_t {
  kPositionEncoding = 1u << 0,
  kTemporal = 1u << 1,
  kAdjacentTying = 1u << 2,
  kUntieState = 1u << 3,
  kCollapsed = 1u << 4,
  kPretrainReachesEncoder = 1u << 5,
  kUnitMask = 1u << 6,
  kKnownFlags = (1u << 7) - 1,
};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void put_matrix(const std::string& name, const Matrix& m) {
    put_string(name);
    put(static_cast<std::uint64_t>(m.rows()));
    put(static_cast<std::uint64_t>(m.cols()));
    out_.append(reinterpret_cast<const char*>(m.data()),
                static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end, std::string source)
      : bytes_(bytes), end_(end), source_(std::move(source)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Matrix get_matrix(std::uint64_t rows, std::uint64_t cols) {
    if (cols != 0 && rows > (end_ - pos_) / sizeof(double) / cols) fail("matrix too large");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const std::size_t n = static_cast<std::size_t>(rows * cols) * sizeof(double);
    need(n);
    std::memcpy(m.data(), bytes_.data() + pos_, n);
    pos_ += n;
    return m;
  }
  bool done() const { return pos_ == end_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw CheckpointError(source_ + ": " + what);
  }

 private:
  void need(std::size_t n) {
    if (n > end_ - pos_) fail("unexpected end of data");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
  std::size_t end_;
  std::string source_;
};

std::uint32_t flags_of(const Checkpoint& c) {
  std::uint32_t f = 0;
  if (c.config.position_encoding) f |= kPositionEncoding;
  if (c.config.temporal) f |= kTemporal;
  if (c.config.tying == WeightTying::kAdjacent) f |= kAdjacentTying;
  if (c.mask.untie_state) f |= kUntieState;
  if (c.mask.collapsed) f |= kCollapsed;
  if (c.mask.pretrain_reaches_encoder) f |= kPretrainReachesEncoder;
  if (c.mask.unit_mask) f |= kUnitMask;
  return f;
}

}  // namespace

const std::string& Checkpoint::get(const std::string& key) const {
  const auto it = meta.find(key);
  if (it == meta.end()) throw CheckpointError("checkpoint has no '" + key + "' entry");
  return it->second;
}

bool Checkpoint::operator==(const Checkpoint& o) const {
  return serialize_checkpoint(*this) == serialize_checkpoint(o);
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes().append(kMagic, sizeof(kMagic));
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(ckpt.config.embedding_size));
  w.put(static_cast<std::uint32_t>(ckpt.config.hops));
  w.put(static_cast<std::uint32_t>(ckpt.config.vocab_size));
  w.put(static_cast<std::uint32_t>(ckpt.config.memory_capacity));
  w.put(ckpt.candidate_count);
  w.put(flags_of(ckpt));
  w.put(ckpt.config.init_stddev);
  w.put(static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    w.put_string(k);
    w.put_string(v);
  }
  std::uint32_t n = 0;
  ckpt.params.for_each([&](const std::string&, const Matrix&) { ++n; });
  w.put(n);
  ckpt.params.for_each(
      [&](const std::string& name, const Matrix& m) { w.put_matrix(name, m); });
  const std::uint64_t sum = fnv1a64(w.bytes());
  w.put(sum);
  return std::move(w.bytes());
}

Checkpoint deserialize_checkpoint(const std::string& bytes,
                                  const std::string& source) {
  constexpr std::size_t kTrailer = sizeof(std::uint64_t);
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) + kTrailer) {
    throw CheckpointError(source + ": file too short (truncated?)");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(source + ": not a checkpoint file");
  }
  const std::size_t body = bytes.size() - kTrailer;
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, kTrailer);
  if (fnv1a64(std::string_view(bytes.data(), body)) != stored) {
    throw CheckpointError(source + ": checksum mismatch (truncated or corrupted)");
  }

  Reader r(bytes, body, source);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.get<char>();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw UnsupportedVersionError(source + ": unsupported checkpoint version " +
                                  std::to_string(version) + " (this build reads " +
                                  std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.config.embedding_size = static_cast<int>(r.get<std::uint32_t>());
  c.config.hops = static_cast<int>(r.get<std::uint32_t>());
  c.config.vocab_size = static_cast<int>(r.get<std::uint32_t>());
  c.config.memory_capacity = static_cast<int>(r.get<std::uint32_t>());
  c.candidate_count = r.get<std::uint32_t>();
  const auto flags = r.get<std::uint32_t>();
  if (flags & ~static_cast<std::uint32_t>(kKnownFlags)) r.fail("unknown flag bits");
  c.config.position_encoding = flags & kPositionEncoding;
  c.config.temporal = flags & kTemporal;
  c.config.tying = (flags & kAdjacentTying) ? WeightTying::kAdjacent : WeightTying::kShared;
  c.mask.untie_state = flags & kUntieState;
  c.mask.collapsed = flags & kCollapsed;
  c.mask.pretrain_reaches_encoder = flags & kPretrainReachesEncoder;
  c.mask.unit_mask = flags & kUnitMask;
  c.config.init_stddev = r.get<double>();
  const auto n_meta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.get_string();
    c.meta[k] = r.get_string();
  }

  // The model determines the expected tensors and shapes.
  try {
    c.params = MemN2N(c.config, c.mask).init_params(0).zeros_like();
  } catch (const Error& e) {
    r.fail(std::string("invalid model header: ") + e.what());
  }
  std::size_t expected = 0;
  c.params.for_each([&](const std::string&, const Matrix&) { ++expected; });
  const auto n = r.get<std::uint32_t>();
  if (n != expected) {
    r.fail("expected " + std::to_string(expected) + " tensors, found " + std::to_string(n));
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = r.get_string();
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    Matrix* target = c.params.find(name);
    if (!target) r.fail("unexpected tensor '" + name + "'");
    if (static_cast<std::uint64_t>(target->rows()) != rows ||
        static_cast<std::uint64_t>(target->cols()) != cols) {
      r.fail("tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
             std::to_string(cols));
    }
    *target = r.get_matrix(rows, cols);
  }
  if (!r.done()) r.fail("trailing bytes");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str(), path);
}

std::uint64_t params_checksum(const ModelParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  params.for_each([&](const std::string& name, const Matrix& m) {
    h = fnv1a64(name, h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(m.data()),
                                 static_cast<std::size_t>(m.size()) * sizeof(double)),
                h);
  });
  return h;
}

}  // namespace maskmem
