#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "../support/test_util.hpp"
#include "smaug/diffcore/ops.hpp"
#include "smaug/text_encoder/text_encoder.hpp"

using namespace smaug;
using namespace smaug::text;
using diff::Tensor;

namespace {

TextConfig small_config() {
  TextConfig c;
  c.depth = 2;
  c.heads = 2;
  c.dim = 8;
  c.mlp_ratio = 2;
  c.vocab_size = vidio::Vocab::instance().size();
  return c;
}

vidio::Caption long_caption(std::size_t words) {
  vidio::Caption c;
  c.token_ids.push_back(vidio::kClsId);
  for (std::size_t i = 0; i < words; ++i) c.token_ids.push_back(2 + static_cast<std::uint32_t>(i % 20));
  return c;
}

}  // namespace

TEST_CASE("text features have one row per token") {
  TextEncoder enc(small_config());
  nn::ParamStore store;
  Rng rng(1);
  enc.init(store, rng);
  nn::Binding b(store, nullptr);
  auto c = vidio::tokenize("red circle");
  CHECK(enc(b, c).shape() == diff::Shape{3, 8});
  CHECK_THROWS_AS(enc(b, std::vector<std::uint32_t>{0, 99}), std::out_of_range);
}

TEST_CASE("permuting words changes the features") {
  TextEncoder enc(small_config());
  nn::ParamStore store;
  Rng rng(2);
  enc.init(store, rng);
  nn::Binding b(store, nullptr);
  Tensor a = enc(b, vidio::tokenize("red circle left"));
  Tensor c = enc(b, vidio::tokenize("red left circle"));
  CHECK(diff::max_abs_diff(a, c) > 1e-6);
}

TEST_CASE("zero-weight text encoder is a layernorm of embedding plus position") {
  TextEncoder enc(small_config());
  nn::ParamStore store;
  Rng rng(3);
  enc.init(store, rng);
  for (auto& p : store.all()) {
    if (p.name.size() > 2 && p.name.compare(p.name.size() - 2, 2, ".w") == 0) p.value = Tensor::zeros(p.value.shape());
  }
  nn::Binding b(store, nullptr);
  auto cap = vidio::tokenize("blue ring up");
  Tensor out = enc(b, cap);
  const auto& tok = store.get("text.tok").value;
  const auto& pos = store.get("text.pos").value;
  for (std::size_t r = 0; r < cap.size(); ++r) {
    std::vector<double> x(8);
    double mu = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 8; ++j) mu += (x[j] = tok.at(cap.token_ids[r], j) + pos.at(r, j));
    mu /= 8;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= 8;
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(out.at(r, j) == doctest::Approx((x[j] - mu) / std::sqrt(var + diff::kLayerNormEps)).epsilon(1e-12));
    }
  }
}

TEST_CASE("mlm corruption counts") {
  Rng rng(4);
  auto m = mlm_corrupt(long_caption(20), rng);
  CHECK(m.positions.size() == 3);
  auto one = mlm_corrupt(long_caption(1), rng);
  CHECK(one.positions.empty());
  auto forced = mlm_corrupt(long_caption(1), rng, kMlmRatio, true);
  CHECK(forced.positions == std::vector<std::size_t>{1});
  CHECK(forced.corrupted[1] == vidio::kMaskId);
  CHECK_THROWS(mlm_corrupt(long_caption(0), rng));
}

TEST_CASE("CLS is never masked and the record restores the caption") {
  Rng rng(5);
  auto cap = long_caption(7);
  for (int t = 0; t < 10000; ++t) {
    auto m = mlm_corrupt(cap, rng, kMlmRatio, true);
    REQUIRE(!m.positions.empty());
    CHECK(m.positions.front() != 0);
    CHECK(m.corrupted[0] == vidio::kClsId);
    for (std::size_t i = 0; i < cap.size(); ++i) {
      const bool masked = std::find(m.positions.begin(), m.positions.end(), i) != m.positions.end();
      if (!masked) CHECK(m.corrupted[i] == cap.token_ids[i]);
    }
    CHECK(mlm_restore(m) == cap.token_ids);
  }
}
