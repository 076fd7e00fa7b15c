#include "smaug/trainer/checkpoint.hpp"

#include <cstring>

#include "smaug/common/bytes.hpp"

namespace smaug::trainer {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'G', 'C'};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(c.seed);
  w.u64(c.step);
  w.str(c.config_text);
  const auto& all = c.params.all();
  w.u32(static_cast<std::uint32_t>(all.size()));
  for (const auto& p : all) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) w.u64(d);
    w.u32(p.decay ? 1 : 0);
    for (double v : p.value.data()) w.f64(v);
    auto it = c.moments.find(p.name);
    const bool has = it != c.moments.end() && !it->second.m.empty();
    w.u64(has ? it->second.t : 0);
    w.u32(has ? 1 : 0);
    if (has) {
      for (double v : it->second.m) w.f64(v);
      for (double v : it->second.v) w.f64(v);
    }
  }
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  ByteReader<CheckpointError> r(bytes, "checkpoint");
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("checkpoint: bad magic at offset 0 (expected \"SMGC\")");
  const std::size_t version_offset = r.offset();
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version) + " at offset " +
                          std::to_string(version_offset) + " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.seed = r.u64();
  c.step = r.u64();
  c.config_text = r.str();
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const auto rank = r.u32();
    diff::Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.u64());
    const bool decay = r.u32() != 0;
    const std::size_t n = diff::shape_numel(shape);
    r.need(n * 8);
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    const auto t = r.u64();
    if (r.u32() != 0) {
      Moments m;
      m.t = t;
      r.need(2 * n * 8);
      m.m.resize(n);
      m.v.resize(n);
      for (auto& v : m.m) v = r.f64();
      for (auto& v : m.v) v = r.f64();
      c.moments.emplace(name, std::move(m));
    }
    c.params.add(std::move(name), diff::Tensor(std::move(shape), std::move(values)), decay);
  }
  if (r.remaining() != 0) {
    throw CheckpointError("checkpoint: " + std::to_string(r.remaining()) + " trailing bytes at offset " +
                          std::to_string(r.offset()));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file(path, encode_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace smaug::trainer
