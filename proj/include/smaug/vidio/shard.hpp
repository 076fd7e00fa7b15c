#pragma once

// Binary shard layout (all integers u32 little-endian, pixels f32 little-endian):
//   "SMG1" | version | pair count | N | H | W | C | patch
//   per pair: caption length | caption ids... | N*H*W*C pixels

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "smaug/vidio/corpus.hpp"

namespace smaug::vidio {

inline constexpr std::uint32_t kShardVersion = 1;

class ShardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ShardHeader {
  std::uint32_t version = kShardVersion;
  std::uint32_t pair_count = 0;
  Geometry geometry;
};

struct Shard {
  ShardHeader header;
  std::vector<VideoTextPair> pairs;
};

void write_shard(const std::filesystem::path& path, const std::vector<VideoTextPair>& pairs);
Shard read_shard(const std::filesystem::path& path);
/// Parses only the fixed-size header.
ShardHeader read_shard_header(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_shard(const std::vector<VideoTextPair>& pairs);
Shard decode_shard(const std::vector<std::uint8_t>& bytes);

}  // namespace smaug::vidio
