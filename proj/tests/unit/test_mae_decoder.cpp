#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "../support/test_util.hpp"
#include "smaug/diffcore/gradcheck.hpp"
#include "smaug/diffcore/ops.hpp"
#include "smaug/diffcore/tape.hpp"
#include "smaug/mae_decoder/decoder.hpp"
#include "smaug/vit_encoder/sparsify.hpp"

using namespace smaug;
using namespace smaug::mae;
using diff::Tensor;

namespace {

DecoderConfig small_config(std::size_t depth = 2) {
  DecoderConfig c;
  c.depth = depth;
  c.dim = 8;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.encoder_dim = 6;
  c.patch_dim = 48;
  c.num_patches = 16;
  return c;
}

patchmask::PatchState masked_state(Rng& rng, double ratio) {
  std::vector<float> f(16 * 16 * 3);
  for (auto& x : f) x = static_cast<float>(rng.uniform());
  std::vector<patchmask::PatchState> s{patchmask::patchify(f, 16, 16, 3, 4)};
  patchmask::sample_tube_mask(s, ratio, rng);
  return s[0];
}

}  // namespace

TEST_CASE("scatter index places every origin at its slot") {
  std::vector<long> origin{vit::kClsOrigin, 0, 1, 2, 3};
  CHECK(scatter_index(origin, 4) == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("scatter counts with masking and sparsification") {
  // 196-grid, 98 masked, 78 attentive survive, one fused token.
  Rng rng(1);
  auto visible = rng.subset(196, 98);
  std::vector<long> origin{vit::kClsOrigin};
  for (std::size_t i = 0; i < 78; ++i) origin.push_back(static_cast<long>(visible[i]));
  origin.push_back(vit::kFusedOrigin);
  auto idx = scatter_index(origin, 196);
  const std::size_t mask_row = origin.size();
  CHECK(std::count(idx.begin(), idx.end(), mask_row) == 118);
  CHECK(idx.size() == 197);
  CHECK(std::find(idx.begin(), idx.end(), origin.size() - 1) == idx.end());  // fused token dropped
}

TEST_CASE("scatter rejects collisions and a missing CLS") {
  CHECK_THROWS_AS(scatter_index({vit::kClsOrigin, 1, 1}, 4), std::invalid_argument);
  CHECK_THROWS_AS(scatter_index({0, 1}, 4), std::invalid_argument);
  CHECK_THROWS_AS(scatter_index({vit::kClsOrigin, 9}, 4), std::invalid_argument);
}

TEST_CASE("scatter is invariant to token order") {
  MaeDecoder dec(small_config());
  nn::ParamStore store;
  Rng rng(2);
  dec.init(store, rng);
  nn::Binding b(store, nullptr);
  Tensor tokens = testing::random_tensor(rng, {6, 8});
  std::vector<long> origin{vit::kClsOrigin, 3, 7, 9, 12, vit::kFusedOrigin};
  std::vector<std::size_t> perm{0, 4, 2, 5, 1, 3};
  std::vector<long> porigin;
  for (auto p : perm) porigin.push_back(origin[p]);
  Tensor a = dec.scatter(b, tokens, origin);
  Tensor c = dec.scatter(b, diff::gather_rows(tokens, perm), porigin);
  CHECK(diff::same_values(a, c));
  CHECK(a.dim(0) == 17);
}

TEST_CASE("no masking and no sparsification puts every token in place") {
  MaeDecoder dec(small_config());
  nn::ParamStore store;
  Rng rng(3);
  dec.init(store, rng);
  store.set("dec.pos", Tensor::zeros({17, 8}));
  nn::Binding b(store, nullptr);
  Tensor tokens = testing::random_tensor(rng, {17, 8});
  std::vector<long> origin{vit::kClsOrigin};
  for (long i = 0; i < 16; ++i) origin.push_back(i);
  CHECK(diff::same_values(dec.scatter(b, tokens, origin), tokens));
}

TEST_CASE("mvm loss examples") {
  Rng rng(4);
  auto s = masked_state(rng, 0.5);
  CHECK(mvm_loss(s.patch_px, s).item() == 0.0);

  std::vector<float> half(16 * 16 * 3, 0.5f);
  std::vector<patchmask::PatchState> hs{patchmask::patchify(half, 16, 16, 3, 2)};
  patchmask::sample_tube_mask(hs, 0.5, rng);
  CHECK(mvm_loss(Tensor::zeros(hs[0].patch_px.shape()), hs[0]).item() == doctest::Approx(0.25).epsilon(1e-15));

  // Changing a visible patch target leaves the loss unchanged.
  Tensor pred = testing::random_tensor(rng, s.patch_px.shape());
  const double base = mvm_loss(pred, s).item();
  auto t = s;
  auto v = t.patch_px.to_vector();
  for (std::size_t j = 0; j < t.patch_dim(); ++j) v[t.visible_idx[0] * t.patch_dim() + j] += 1.0;
  t.patch_px = Tensor(t.patch_px.shape(), v);
  CHECK(mvm_loss(pred, t).item() == base);
  // Changing a masked one does not.
  for (std::size_t j = 0; j < t.patch_dim(); ++j) v[t.masked_idx[0] * t.patch_dim() + j] += 1.0;
  t.patch_px = Tensor(t.patch_px.shape(), v);
  CHECK(mvm_loss(pred, t).item() != base);
  CHECK(base >= 0.0);
}

TEST_CASE("nothing masked gives a zero loss") {
  Rng rng(5);
  auto s = masked_state(rng, 0.0);
  CHECK(mvm_loss(testing::random_tensor(rng, s.patch_px.shape()), s).item() == 0.0);
}

TEST_CASE("normalised pixel targets") {
  Rng rng(6);
  auto s = masked_state(rng, 0.5);
  CHECK(mvm_loss(s.patch_px, s, true).item() > 0.0);
}

TEST_CASE("decoder gradients reach visible slots and match finite differences") {
  MaeDecoder dec(small_config());
  nn::ParamStore store;
  Rng rng(7);
  dec.init(store, rng);
  auto s = masked_state(rng, 0.5);
  std::vector<long> origin{vit::kClsOrigin};
  for (auto i : s.visible_idx) origin.push_back(static_cast<long>(i));
  Tensor enc = testing::random_tensor(rng, {origin.size(), 6});
  auto f = [&](const Tensor& x) {
    nn::Binding b(store, nullptr);
    return mvm_loss(dec(b, x, origin), s);
  };
  auto rep = diff::finite_diff_check(f, enc, 1e-5);
  CHECK(rep.max_rel_error <= 1e-5);

  diff::Tape tape;
  Tensor leaf = tape.leaf(enc);
  Tensor loss = f(leaf);
  Tensor g = tape.backward(loss).grad(leaf);
  double norm = 0.0;
  for (std::size_t j = 0; j < 6; ++j) norm += std::abs(g.at(1, j));
  CHECK(norm > 0.0);
}

TEST_CASE("decoder parameter count grows by whole blocks") {
  nn::ParamStore a, b;
  Rng r1(1), r2(1);
  MaeDecoder(small_config(2)).init(a, r1);
  MaeDecoder(small_config(3)).init(b, r2);
  const std::size_t d = 8, h = 16;
  const std::size_t per_block = 4 * (d * d + d) + 2 * 2 * d + (d * h + h) + (h * d + d);
  CHECK(b.scalar_count("dec") - a.scalar_count("dec") == per_block);
  CHECK_THROWS(MaeDecoder(small_config(0)));
}
