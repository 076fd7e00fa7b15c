#include "smaug/vidio/shard.hpp"

#include <cstring>

#include "smaug/common/bytes.hpp"

namespace smaug::vidio {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'G', '1'};

ShardHeader parse_header(ByteReader<ShardError>& r) {
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw ShardError("shard: bad magic at offset 0 (expected SMG1)");
  ShardHeader h;
  const std::size_t version_offset = r.offset();
  h.version = r.u32();
  if (h.version != kShardVersion) {
    throw ShardError("shard: unsupported version " + std::to_string(h.version) + " at offset " +
                     std::to_string(version_offset) + " (expected " + std::to_string(kShardVersion) + ")");
  }
  h.pair_count = r.u32();
  h.geometry.frames = r.u32();
  h.geometry.height = r.u32();
  h.geometry.width = r.u32();
  h.geometry.channels = r.u32();
  h.geometry.patch = r.u32();
  try {
    h.geometry.validate();
  } catch (const std::invalid_argument& e) {
    throw ShardError(std::string("shard: invalid header geometry: ") + e.what());
  }
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_shard(const std::vector<VideoTextPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("shard: no pairs to write");
  const Geometry& g = pairs.front().clip.geometry;
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kShardVersion);
  w.u32(static_cast<std::uint32_t>(pairs.size()));
  for (auto v : {g.frames, g.height, g.width, g.channels, g.patch}) w.u32(static_cast<std::uint32_t>(v));
  for (const auto& p : pairs) {
    if (!(p.clip.geometry == g)) throw std::invalid_argument("shard: pairs with differing geometry");
    w.u32(static_cast<std::uint32_t>(p.caption.token_ids.size()));
    for (auto id : p.caption.token_ids) w.u32(id);
    for (float v : p.clip.pixels) w.f32(v);
  }
  return std::move(w.bytes());
}

Shard decode_shard(const std::vector<std::uint8_t>& bytes) {
  ByteReader<ShardError> r(bytes, "shard");
  Shard s;
  s.header = parse_header(r);
  const Geometry& g = s.header.geometry;
  const std::size_t n_pix = g.frames * g.frame_size();
  s.pairs.reserve(s.header.pair_count);
  for (std::uint32_t i = 0; i < s.header.pair_count; ++i) {
    VideoTextPair p;
    const auto len = r.u32();
    r.need(static_cast<std::size_t>(len) * 4);
    p.caption.token_ids.resize(len);
    for (auto& id : p.caption.token_ids) id = r.u32();
    p.clip.clip_id = i;
    p.clip.geometry = g;
    p.clip.distractor.assign(g.frames, false);
    r.need(n_pix * 4);
    p.clip.pixels.resize(n_pix);
    for (auto& v : p.clip.pixels) v = r.f32();
    s.pairs.push_back(std::move(p));
  }
  if (r.remaining() != 0) {
    throw ShardError("shard: " + std::to_string(r.remaining()) + " trailing bytes at offset " +
                     std::to_string(r.offset()));
  }
  return s;
}

void write_shard(const std::filesystem::path& path, const std::vector<VideoTextPair>& pairs) {
  write_file(path, encode_shard(pairs));
}

Shard read_shard(const std::filesystem::path& path) { return decode_shard(read_file(path)); }

ShardHeader read_shard_header(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader<ShardError> r(bytes, "shard");
  return parse_header(r);
}

}  // namespace smaug::vidio
