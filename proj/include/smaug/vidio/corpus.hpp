#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smaug/common/rng.hpp"
#include "smaug/vidio/vocab.hpp"

namespace smaug::vidio {

struct Geometry {
  std::size_t frames = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 3;
  std::size_t patch = 8;

  std::size_t frame_size() const noexcept { return height * width * channels; }
  /// Throws unless height and width are positive multiples of the patch size.
  void validate() const;
  bool operator==(const Geometry&) const = default;
};

/// Frame stack N x H x W x C in [0,1], row-major, stored as f32.
struct VideoClip {
  std::uint32_t clip_id = 0;
  Geometry geometry;
  std::vector<float> pixels;
  /// Per frame: true for pure-noise distractor frames. Generation metadata,
  /// not persisted in shards.
  std::vector<bool> distractor;

  std::span<const float> frame(std::size_t i) const;
  /// Persisted fields only: id, geometry, pixels.
  bool same_content(const VideoClip& other) const;
};

struct VideoTextPair {
  VideoClip clip;
  Caption caption;
  /// Concept indices rendered in the clip (generation metadata).
  std::vector<std::size_t> concepts;
};

/// A rendered concept: one coloured shape with a motion.
struct Concept {
  std::size_t color = 0;
  std::size_t shape = 0;
  std::size_t motion = 0;
};

struct CorpusOptions {
  std::uint64_t seed = 1;
  std::size_t n_pairs = 1;
  std::size_t n_concepts = 12;
  Geometry geometry;
  double distractor_frac = 0.5;
};

/// Concept table for `n_concepts` (each concept has a distinct colour).
std::vector<Concept> concept_table(std::size_t n_concepts);

/// Caption naming `concepts` (ascending order, joined by "and").
Caption caption_for(std::span<const std::size_t> concepts, std::span<const Concept> table);

/// Renders one clip showing `concepts` with the given fraction of distractor frames.
VideoClip render_clip(std::span<const std::size_t> concepts, std::span<const Concept> table, const Geometry& g,
                      double distractor_frac, Rng& rng);

/// Number of distinct 1-3 concept combinations available.
std::size_t combination_count(std::size_t n_concepts);

/// Deterministic corpus. Concept combinations are drawn without replacement
/// while distinct combinations remain, so captions are unique whenever
/// n_pairs <= combination_count(n_concepts).
std::vector<VideoTextPair> generate_corpus(const CorpusOptions& opts);

}  // namespace smaug::vidio
