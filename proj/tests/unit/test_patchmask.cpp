#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "../support/test_util.hpp"
#include "smaug/diffcore/ops.hpp"
#include "smaug/patchmask/patchmask.hpp"

using namespace smaug;
using namespace smaug::patchmask;
using diff::Tensor;

namespace {

std::vector<float> random_frame(Rng& rng, std::size_t n) {
  std::vector<float> f(n);
  for (auto& x : f) x = static_cast<float>(rng.uniform());
  return f;
}

}  // namespace

TEST_CASE("patch counts") {
  std::vector<float> small(32 * 32 * 3, 0.0f);
  CHECK(patchify(small, 32, 32, 3, 16).num_patches() == 4);
  std::vector<float> vit(224 * 224 * 3, 0.0f);
  auto s = patchify(vit, 224, 224, 3, 16);
  CHECK(s.num_patches() == 196);
  CHECK(s.patch_dim() == 16 * 16 * 3);
}

TEST_CASE("indivisible frames are rejected") {
  std::vector<float> f(30 * 32 * 3, 0.0f);
  CHECK_THROWS_AS(patchify(f, 30, 32, 3, 8), std::invalid_argument);
}

TEST_CASE("patches are row-major with (y, x, c) pixel order") {
  const std::size_t h = 4, w = 6, c = 2, p = 2;
  std::vector<float> f(h * w * c);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<float>(i);
  auto s = patchify(f, h, w, c, p);
  REQUIRE(s.rows == 2);
  REQUIRE(s.cols == 3);
  // Patch 4 is grid (1, 1): pixel (y=2, x=2).
  const std::size_t first = (2 * w + 2) * c;
  CHECK(s.patch_px.at(4, 0) == first);
  CHECK(s.patch_px.at(4, 1) == first + 1);
  CHECK(s.patch_px.at(4, 2) == first + 2);
  CHECK(s.patch_px.at(4, 4) == (3 * w + 2) * c);
}

TEST_CASE("unpatchify inverts patchify") {
  Rng rng(4);
  for (std::size_t p : {4u, 8u, 16u}) {
    auto f = random_frame(rng, 32 * 48 * 3);
    CHECK(unpatchify(patchify(f, 32, 48, 3, p)) == f);
  }
}

TEST_CASE("masked count rounds half to even") {
  CHECK(masked_count(196, 0.5) == 98);
  CHECK(masked_count(196, 0.0) == 0);
  CHECK(masked_count(4, 0.625) == 2);  // 2.5 -> 2
  CHECK(masked_count(4, 0.875) == 4);  // 3.5 -> 4
  CHECK(masked_count(196, 0.65) == 127);
}

TEST_CASE("tube mask shares indices across frames") {
  std::vector<float> f(224 * 224 * 3, 0.0f);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<PatchState> frames(4, patchify(f, 224, 224, 3, 16));
    Rng rng(seed);
    sample_tube_mask(frames, 0.5, rng);
    CHECK(frames[0].masked_idx.size() == 98);
    CHECK(frames[0].visible_idx.size() == 98);
    for (const auto& fr : frames) {
      CHECK(fr.masked_idx == frames[0].masked_idx);
      CHECK(fr.visible_idx == frames[0].visible_idx);
    }
    std::vector<int> seen(196, 0);
    for (auto i : frames[0].masked_idx) seen[i]++;
    for (auto i : frames[0].visible_idx) seen[i]++;
    for (int v : seen) CHECK(v == 1);
    CHECK(std::is_sorted(frames[0].visible_idx.begin(), frames[0].visible_idx.end()));
  }
}

TEST_CASE("ratio zero keeps everything and ratios above the cap are rejected") {
  std::vector<float> f(32 * 32 * 3, 0.0f);
  std::vector<PatchState> frames{patchify(f, 32, 32, 3, 8)};
  Rng rng(1);
  sample_tube_mask(frames, 0.0, rng);
  CHECK(frames[0].visible_idx.size() == 16);
  CHECK(frames[0].masked_idx.empty());
  CHECK_THROWS_AS(sample_tube_mask(frames, 0.7, rng), std::invalid_argument);
  CHECK_NOTHROW(sample_tube_mask(frames, 0.7, rng, true));
  CHECK(frames[0].masked_idx.size() == 11);
}

TEST_CASE("mask sampling is uniform per patch") {
  std::vector<float> f(32 * 32 * 3, 0.0f);
  const std::size_t draws = 10000;
  const double ratio = 0.5;
  std::vector<std::size_t> hits(16, 0);
  Rng rng(2024, "uniformity");
  for (std::size_t t = 0; t < draws; ++t) {
    std::vector<PatchState> frames{patchify(f, 32, 32, 3, 8)};
    sample_tube_mask(frames, ratio, rng);
    for (auto i : frames[0].masked_idx) hits[i]++;
  }
  const double sigma = std::sqrt(draws * ratio * (1 - ratio));
  for (auto h : hits) CHECK(std::abs(static_cast<double>(h) - draws * ratio) <= 3 * sigma);
}

TEST_CASE("frame sampling is sorted and without replacement") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    auto idx = sample_frames(8, 4, rng);
    REQUIRE(idx.size() == 4);
    for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i - 1] < idx[i]);
  }
  CHECK_THROWS(sample_frames(4, 5, rng));
}

TEST_CASE("embedding shapes and zero weights") {
  Rng rng(5);
  auto f = random_frame(rng, 224 * 224 * 3);
  std::vector<PatchState> frames{patchify(f, 224, 224, 3, 16)};
  sample_tube_mask(frames, 0.5, rng);
  const std::size_t d = 64;
  Tensor cls = testing::random_tensor(rng, {1, d});
  Tensor out = embed_patches(frames[0], Tensor::zeros({768, d}), Tensor::zeros({196, d}), cls);
  CHECK(out.shape() == diff::Shape{99, d});
  for (std::size_t j = 0; j < d; ++j) CHECK(out.at(0, j) == cls[j]);
  for (std::size_t i = d; i < out.size(); ++i) CHECK(out[i] == 0.0);
  CHECK_THROWS_AS(embed_patches(frames[0], Tensor::zeros({767, d}), Tensor::zeros({196, d}), cls), diff::ShapeError);
  CHECK_THROWS_AS(embed_patches(frames[0], Tensor::zeros({768, d}), Tensor::zeros({195, d}), cls), diff::ShapeError);
}

TEST_CASE("position embedding lands in the slot of its patch") {
  std::vector<float> f(32 * 32 * 3, 0.0f);
  std::vector<PatchState> frames{patchify(f, 32, 32, 3, 8)};
  Rng rng(8);
  sample_tube_mask(frames, 0.5, rng);
  const auto& vis = frames[0].visible_idx;
  const std::size_t d = 16;
  for (std::size_t probe = 0; probe < 16; ++probe) {
    // One-hot probe: position row `probe` carries a 1 in column probe.
    std::vector<double> pos(16 * d, 0.0);
    pos[probe * d + probe] = 1.0;
    Tensor out = embed_patches(frames[0], Tensor::zeros({192, d}), Tensor({16, d}, pos), Tensor::zeros({1, d}));
    auto it = std::find(vis.begin(), vis.end(), probe);
    for (std::size_t slot = 0; slot < out.dim(0); ++slot) {
      const bool expect = it != vis.end() && slot == 1 + static_cast<std::size_t>(it - vis.begin());
      CHECK(out.at(slot, probe) == (expect ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("masked pixels never reach the embedding") {
  Rng rng(9);
  auto f = random_frame(rng, 32 * 32 * 3);
  std::vector<PatchState> frames{patchify(f, 32, 32, 3, 8)};
  sample_tube_mask(frames, 0.5, rng);
  Tensor proj = testing::random_tensor(rng, {192, 16});
  Tensor pos = testing::random_tensor(rng, {16, 16});
  Tensor cls = testing::random_tensor(rng, {1, 16});
  Tensor base = embed_patches(frames[0], proj, pos, cls);
  auto g = f;
  for (auto m : frames[0].masked_idx) {
    const std::size_t r = m / 4, c = m % 4;
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x)
        for (std::size_t ch = 0; ch < 3; ++ch) g[((r * 8 + y) * 32 + c * 8 + x) * 3 + ch] += 0.5f;
  }
  auto perturbed = patchify(g, 32, 32, 3, 8);
  perturbed.visible_idx = frames[0].visible_idx;
  perturbed.masked_idx = frames[0].masked_idx;
  CHECK(diff::same_values(embed_patches(perturbed, proj, pos, cls), base));
  CHECK_FALSE(diff::same_values(perturbed.patch_px, frames[0].patch_px));
}
