#include "smaug/vidio/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace smaug::vidio {

namespace {

constexpr std::size_t kMaxObjects = 3;
constexpr double kBackgroundLevel = 0.2;

// RGB for each colour word, in Vocab order.
constexpr std::array<std::array<float, 3>, 16> kPalette{{
    {1.0f, 0.0f, 0.0f}, {0.0f, 0.8f, 0.0f}, {0.0f, 0.2f, 1.0f}, {1.0f, 1.0f, 0.0f},
    {0.0f, 1.0f, 1.0f}, {1.0f, 0.0f, 1.0f}, {1.0f, 0.5f, 0.0f}, {0.5f, 0.0f, 1.0f},
    {1.0f, 1.0f, 1.0f}, {1.0f, 0.6f, 0.75f}, {0.6f, 1.0f, 0.2f}, {0.0f, 0.5f, 0.5f},
    {0.1f, 0.1f, 0.55f}, {0.55f, 0.05f, 0.05f}, {0.55f, 0.55f, 0.0f}, {0.6f, 0.6f, 0.6f},
}};

constexpr std::array<std::array<double, 2>, 6> kMotionDir{{
    {-1.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}, {0.0, 0.0}, {1.0, 1.0},
}};

// dx, dy are offsets normalised by the object radius.
bool inside_shape(std::size_t shape, double dx, double dy) {
  const double ax = std::abs(dx), ay = std::abs(dy);
  switch (shape) {
    case 0: return dx * dx + dy * dy <= 1.0;
    case 1: return ax <= 0.8 && ay <= 0.8;
    case 2: return dy >= -0.9 && dy <= 0.8 && ax <= 0.55 * (dy + 0.9);
    case 3: return ax + ay <= 1.0;
    case 4: return (ax <= 0.3 && ay <= 1.0) || (ay <= 0.3 && ax <= 1.0);
    default: {
      const double r2 = dx * dx + dy * dy;
      return r2 <= 1.0 && r2 >= 0.36;
    }
  }
}

void for_each_combination(std::size_t n, std::size_t k, std::vector<std::size_t>& cur, std::size_t start,
                          std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < n; ++i) {
    cur.push_back(i);
    for_each_combination(n, k, cur, i + 1, out);
    cur.pop_back();
  }
}

}  // namespace

void Geometry::validate() const {
  if (frames == 0 || channels == 0) throw std::invalid_argument("geometry: frames and channels must be positive");
  if (patch == 0 || height == 0 || width == 0 || height % patch != 0 || width % patch != 0) {
    throw std::invalid_argument("geometry: frame " + std::to_string(height) + "x" + std::to_string(width) +
                                " not divisible by patch size " + std::to_string(patch));
  }
}

std::span<const float> VideoClip::frame(std::size_t i) const {
  if (i >= geometry.frames) throw std::out_of_range("frame index " + std::to_string(i));
  const std::size_t fs = geometry.frame_size();
  return std::span<const float>(pixels).subspan(i * fs, fs);
}

bool VideoClip::same_content(const VideoClip& other) const {
  return clip_id == other.clip_id && geometry == other.geometry && pixels == other.pixels;
}

std::vector<Concept> concept_table(std::size_t n_concepts) {
  const auto& vocab = Vocab::instance();
  if (n_concepts == 0 || n_concepts > vocab.colors().size()) {
    throw std::invalid_argument("n_concepts must be in [1, " + std::to_string(vocab.colors().size()) + "]");
  }
  const std::size_t ns = vocab.shapes().size(), nm = vocab.motions().size();
  std::vector<Concept> table;
  for (std::size_t i = 0; i < n_concepts; ++i) table.push_back({i, i % ns, (i / ns + 2 * i) % nm});
  return table;
}

Caption caption_for(std::span<const std::size_t> concepts, std::span<const Concept> table) {
  const auto& vocab = Vocab::instance();
  std::vector<std::size_t> sorted(concepts.begin(), concepts.end());
  std::sort(sorted.begin(), sorted.end());
  Caption c{{kClsId}};
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Concept& k = table[sorted[i]];
    if (i) c.token_ids.push_back(vocab.id("and"));
    c.token_ids.push_back(vocab.id(vocab.colors()[k.color]));
    c.token_ids.push_back(vocab.id(vocab.shapes()[k.shape]));
    c.token_ids.push_back(vocab.id(vocab.motions()[k.motion]));
  }
  validate_caption(c, vocab.size());
  return c;
}

VideoClip render_clip(std::span<const std::size_t> concepts, std::span<const Concept> table, const Geometry& g,
                      double distractor_frac, Rng& rng) {
  g.validate();
  if (concepts.empty() || concepts.size() > kMaxObjects) throw std::invalid_argument("clip needs 1-3 concepts");
  if (g.channels != 3) throw std::invalid_argument("synthetic corpus renders RGB frames (channels=3)");
  if (distractor_frac < 0.0 || distractor_frac > 1.0) throw std::invalid_argument("distractor fraction outside [0,1]");

  VideoClip clip;
  clip.geometry = g;
  clip.pixels.resize(g.frames * g.frame_size());
  clip.distractor.assign(g.frames, false);

  std::size_t n_distract = static_cast<std::size_t>(std::nearbyint(distractor_frac * static_cast<double>(g.frames)));
  n_distract = std::min(n_distract, g.frames - 1);
  for (auto f : rng.subset(g.frames, n_distract)) clip.distractor[f] = true;

  // Objects occupy distinct cells of a 2x2 layout.
  std::vector<std::size_t> cells{0, 1, 2, 3};
  rng.shuffle(cells);
  const double cell_h = static_cast<double>(g.height) / 2.0, cell_w = static_cast<double>(g.width) / 2.0;
  const double radius = 0.34 * std::min(cell_h, cell_w);
  const double step = static_cast<double>(std::min(g.height, g.width)) / 16.0;
  struct Placed {
    double cy, cx;
    const Concept* k;
  };
  std::vector<Placed> objects;
  for (std::size_t j = 0; j < concepts.size(); ++j) {
    const std::size_t cell = cells[j];
    const double jy = rng.uniform(-1.0, 1.0), jx = rng.uniform(-1.0, 1.0);
    objects.push_back({(static_cast<double>(cell / 2) + 0.5) * cell_h + jy,
                       (static_cast<double>(cell % 2) + 0.5) * cell_w + jx, &table[concepts[j]]});
  }

  for (std::size_t f = 0; f < g.frames; ++f) {
    float* px = clip.pixels.data() + f * g.frame_size();
    if (clip.distractor[f]) {
      for (std::size_t i = 0; i < g.frame_size(); ++i) px[i] = static_cast<float>(rng.uniform());
      continue;
    }
    for (std::size_t i = 0; i < g.frame_size(); ++i) px[i] = static_cast<float>(kBackgroundLevel * rng.uniform());
    const double t = static_cast<double>(f) - static_cast<double>(g.frames - 1) / 2.0;
    for (const auto& o : objects) {
      const auto& dir = kMotionDir[o.k->motion];
      const double cy = o.cy + dir[1] * step * t, cx = o.cx + dir[0] * step * t;
      const auto& rgb = kPalette[o.k->color];
      for (std::size_t y = 0; y < g.height; ++y) {
        for (std::size_t x = 0; x < g.width; ++x) {
          const double dy = (static_cast<double>(y) + 0.5 - cy) / radius;
          const double dx = (static_cast<double>(x) + 0.5 - cx) / radius;
          if (!inside_shape(o.k->shape, dx, dy)) continue;
          for (std::size_t c = 0; c < 3; ++c) px[(y * g.width + x) * 3 + c] = rgb[c];
        }
      }
    }
  }
  return clip;
}

std::size_t combination_count(std::size_t n) {
  std::size_t total = 0;
  for (std::size_t k = 1; k <= std::min(n, kMaxObjects); ++k) {
    std::size_t c = 1;
    for (std::size_t i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
    total += c;
  }
  return total;
}

std::vector<VideoTextPair> generate_corpus(const CorpusOptions& opts) {
  opts.geometry.validate();
  if (opts.n_pairs == 0) throw std::invalid_argument("n_pairs must be >= 1");
  const auto table = concept_table(opts.n_concepts);

  std::vector<std::vector<std::size_t>> combos;
  for (std::size_t k = 1; k <= std::min(opts.n_concepts, kMaxObjects); ++k) {
    std::vector<std::size_t> cur;
    for_each_combination(opts.n_concepts, k, cur, 0, combos);
  }

  Rng order(opts.seed, "corpus.combos");
  std::vector<std::size_t> schedule;
  while (schedule.size() < opts.n_pairs) {
    std::vector<std::size_t> perm(combos.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    order.shuffle(perm);
    schedule.insert(schedule.end(), perm.begin(), perm.end());
  }
  schedule.resize(opts.n_pairs);

  std::vector<VideoTextPair> pairs;
  pairs.reserve(opts.n_pairs);
  for (std::size_t i = 0; i < opts.n_pairs; ++i) {
    const auto& combo = combos[schedule[i]];
    Rng rng(opts.seed, "corpus.render", i);
    VideoTextPair p;
    p.clip = render_clip(combo, table, opts.geometry, opts.distractor_frac, rng);
    p.clip.clip_id = static_cast<std::uint32_t>(i);
    p.caption = caption_for(combo, table);
    p.concepts = combo;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace smaug::vidio
