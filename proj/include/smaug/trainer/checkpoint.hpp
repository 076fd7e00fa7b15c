#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "smaug/nn/params.hpp"
#include "smaug/trainer/optimizer.hpp"

namespace smaug::trainer {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: "SMGC", u32 version, u64 seed, u64 step, config text,
/// u32 tensor count, then per tensor: name, u32 rank, u64 dims, u32 decay,
/// f64 values, u64 adam step, u32 has_moments, f64 m, f64 v.
struct Checkpoint {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::string config_text;
  nn::ParamStore params;
  std::map<std::string, Moments> moments;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace smaug::trainer
