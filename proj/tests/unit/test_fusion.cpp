#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "../support/test_util.hpp"
#include "smaug/diffcore/gradcheck.hpp"
#include "smaug/diffcore/ops.hpp"
#include "smaug/fusion/fusion.hpp"

using namespace smaug;
using namespace smaug::fusion;
using diff::Tensor;

namespace {

FusionConfig small_config(std::size_t depth = 2) {
  FusionConfig c;
  c.depth = depth;
  c.heads = 2;
  c.dim = 8;
  c.mlp_ratio = 2;
  c.vocab_size = 11;
  return c;
}

struct Fixture {
  FusionEncoder enc{small_config()};
  nn::ParamStore store;
  Rng rng{1};
  Fixture() { enc.init(store, rng); }
};

}  // namespace

TEST_CASE("fusion output shapes") {
  Fixture fx;
  nn::Binding b(fx.store, nullptr);
  Tensor text = testing::random_tensor(fx.rng, {5, 8});
  Tensor vis = testing::random_tensor(fx.rng, {13, 8});
  std::vector<std::size_t> pos{2, 4};
  auto out = fx.enc(b, text, vis, pos);
  CHECK(out.sequence.shape() == diff::Shape{5, 8});
  CHECK(out.cls.shape() == diff::Shape{1, 8});
  CHECK(out.vtm_logits.shape() == diff::Shape{1, 2});
  CHECK(out.mlm_logits.shape() == diff::Shape{2, 11});
  CHECK_FALSE(fx.enc(b, text, vis).mlm_logits.defined());
  CHECK_THROWS_AS(fx.enc(b, text, testing::random_tensor(fx.rng, {3, 7})), diff::ShapeError);
}

TEST_CASE("duplicating the visual sequence leaves fusion unchanged") {
  Fixture fx;
  nn::Binding b(fx.store, nullptr);
  for (int t = 0; t < 20; ++t) {
    Tensor text = testing::random_tensor(fx.rng, {4, 8});
    Tensor vis = testing::random_tensor(fx.rng, {6, 8});
    auto a = fx.enc(b, text, vis);
    auto c = fx.enc(b, text, diff::concat({vis, vis}, 0));
    CHECK(diff::max_abs_diff(a.sequence, c.sequence) < 1e-12);
  }
}

TEST_CASE("zero visual features give a text-only function") {
  // With zero context the cross-attention output is the constant o(v-bias);
  // any zero-visual input length gives the same result.
  Fixture fx;
  nn::Binding b(fx.store, nullptr);
  Tensor text = testing::random_tensor(fx.rng, {4, 8});
  auto a = fx.enc(b, text, Tensor::zeros({3, 8}));
  auto c = fx.enc(b, text, Tensor::zeros({9, 8}));
  CHECK(diff::max_abs_diff(a.sequence, c.sequence) < 1e-12);
}

TEST_CASE("vtm head") {
  Fixture fx;
  fx.store.set("fusion.vtm.w", Tensor::zeros({8, 2}));
  nn::Binding b(fx.store, nullptr);
  Tensor cls = testing::random_tensor(fx.rng, {3, 8});
  Tensor logits = fx.enc.vtm_forward(b, cls);
  CHECK(logits.shape() == diff::Shape{3, 2});
  for (double v : logits.data()) CHECK(v == 0.0);

  Fixture fy;
  Tensor w0 = fy.store.get("fusion.vtm.w").value;
  auto f = [&](const Tensor& w) {
    nn::Binding bb(fy.store, nullptr);
    bb.bind("fusion.vtm.w", w);
    return diff::cross_entropy(fy.enc.vtm_forward(bb, cls), std::vector<std::size_t>{1, 0, 1});
  };
  CHECK(diff::finite_diff_check(f, w0, 1e-5).pass);
}

TEST_CASE("two-block fusion gradients match finite differences") {
  Fixture fx;
  std::vector<std::size_t> pos{1, 3};
  for (int t = 0; t < 5; ++t) {
    Tensor text = testing::random_tensor(fx.rng, {4, 8});
    Tensor vis = testing::random_tensor(fx.rng, {5, 8});
    auto via_text = [&](const Tensor& x) {
      nn::Binding b(fx.store, nullptr);
      auto out = fx.enc(b, x, vis, pos);
      return diff::add(diff::cross_entropy(out.vtm_logits, std::vector<std::size_t>{1}),
                       diff::cross_entropy(out.mlm_logits, std::vector<std::size_t>{3, 7}));
    };
    auto via_visual = [&](const Tensor& v) {
      nn::Binding b(fx.store, nullptr);
      auto out = fx.enc(b, text, v, pos);
      return diff::cross_entropy(out.vtm_logits, std::vector<std::size_t>{0});
    };
    CHECK(diff::finite_diff_check(via_text, text, 1e-5).pass);
    CHECK(diff::finite_diff_check(via_visual, vis, 1e-5).pass);
  }
}
