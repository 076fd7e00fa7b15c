#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "../support/tiny_config.hpp"
#include "smaug/diffcore/mac_counter.hpp"
#include "smaug/trainer/trainer.hpp"

using namespace smaug;
using namespace smaug::trainer;
using diff::Tensor;

namespace {

std::vector<vidio::VideoTextPair> corpus_for(const TrainConfig& c) {
  vidio::CorpusOptions o;
  o.seed = c.seed;
  o.n_pairs = c.n_train;
  o.n_concepts = c.n_concepts;
  o.geometry = c.geometry();
  o.distractor_frac = c.distractor_frac;
  return vidio::generate_corpus(o);
}

bool same_logs(const std::vector<StepLog>& a, const std::vector<StepLog>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].total != b[i].total || a[i].vtc != b[i].vtc || a[i].vtm != b[i].vtm || a[i].mlm != b[i].mlm ||
        a[i].mvm != b[i].mvm || a[i].lr != b[i].lr || a[i].step != b[i].step)
      return false;
  }
  return true;
}

bool same_params(const nn::ParamStore& a, const nn::ParamStore& b) {
  if (a.all().size() != b.all().size()) return false;
  for (std::size_t i = 0; i < a.all().size(); ++i) {
    if (a.all()[i].name != b.all()[i].name || !diff::same_values(a.all()[i].value, b.all()[i].value)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("config text round trip") {
  TrainConfig c = testing::tiny_config();
  c.base_lr = 3.7e-4;
  c.sparsify_layers = {1, 2};
  c.normalize_pixel_targets = true;
  TrainConfig d = parse_config(to_text(c));
  CHECK(to_text(d) == to_text(c));
  CHECK(d.base_lr == c.base_lr);
  CHECK(d.sparsify_layers == c.sparsify_layers);
  CHECK(config_keys().size() == 40);
}

TEST_CASE("config rejects unknown keys and bad values") {
  TrainConfig c;
  CHECK_THROWS_WITH_AS(set_key(c, "learning_rate", "1"), "unknown config key 'learning_rate'", std::invalid_argument);
  CHECK_THROWS_AS(set_key(c, "epochs", "ten"), std::invalid_argument);
  CHECK_THROWS_AS(set_key(c, "epochs", "-1"), std::invalid_argument);
  CHECK_THROWS_AS(set_key(c, "normalize_pixel_targets", "maybe"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("epochs 3"), std::invalid_argument);
  CHECK(parse_config("# comment\n\n epochs = 3 \n").epochs == 3);
}

TEST_CASE("config validation") {
  auto bad = [](auto edit) {
    TrainConfig c;
    edit(c);
    return c;
  };
  CHECK_THROWS(bad([](TrainConfig& c) { c.min_lr = 1.0; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.warmup_epochs = 10; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.mask_ratio = 0.7; }).validate());
  CHECK_NOTHROW(bad([](TrainConfig& c) {
                  c.mask_ratio = 0.7;
                  c.allow_high_mask_ratio = true;
                }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.sparsify_layers = {5}; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) {
                 c.frames = 4;
                 c.frames_per_clip = 4;
                 c.kappa = 4;
               }).validate());
  CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("learning rate schedule") {
  LrSchedule s{1e-4, 1e-6, 10, 100};
  CHECK(s.lr_at(0) == 0.0);
  CHECK(s.lr_at(5) == doctest::Approx(5e-5).epsilon(1e-15));
  CHECK(s.lr_at(10) == 1e-4);
  CHECK(std::abs(s.lr_at(99) - 1e-6) <= 1e-12);
  const double mid = 1e-6 + 0.5 * (1e-4 - 1e-6) * (1 + std::cos(M_PI * 44.5 / 89.0));
  CHECK(s.lr_at(54) == doctest::Approx(1e-6 + 0.5 * (1e-4 - 1e-6) * (1 + std::cos(M_PI * 44.0 / 89.0))).epsilon(1e-14));
  CHECK(mid > 0.0);
  for (std::size_t t = 11; t < 100; ++t) CHECK(s.lr_at(t) <= s.lr_at(t - 1));
}

TEST_CASE("adamw updates") {
  nn::ParamStore store;
  store.add("w", Tensor::scalar(1.0), true);
  store.add("ln.gamma", Tensor::scalar(1.0), false);

  SUBCASE("zero gradient and zero decay leave parameters unchanged") {
    AdamW opt({0.9, 0.999, 1e-8, 0.0});
    opt.step(store, {{"w", Tensor::scalar(0.0)}}, 0.1);
    CHECK(store.get("w").value.item() == 1.0);
  }
  SUBCASE("first step on a quadratic") {
    AdamW opt({0.9, 0.999, 1e-8, 0.0});
    const double g = 2.0;  // d/dw of w^2 at w = 1
    opt.step(store, {{"w", Tensor::scalar(g)}}, 0.1);
    const double m = 0.1 * g / (1 - 0.9), v = 0.001 * g * g / (1 - 0.999);
    CHECK(store.get("w").value.item() == doctest::Approx(1.0 - 0.1 * m / (std::sqrt(v) + 1e-8)).epsilon(1e-15));
  }
  SUBCASE("decoupled decay alone") {
    AdamW opt({0.9, 0.999, 1e-8, 0.02});
    opt.step(store, {{"w", Tensor::scalar(0.0)}, {"ln.gamma", Tensor::scalar(0.0)}}, 0.5);
    CHECK(store.get("w").value.item() == doctest::Approx(1.0 - 0.5 * 0.02).epsilon(1e-15));
    CHECK(store.get("ln.gamma").value.item() == 1.0);
  }
  SUBCASE("non-finite gradients abort the whole step") {
    AdamW opt;
    CHECK_THROWS_AS(opt.step(store,
                             {{"ln.gamma", Tensor::scalar(1.0)},
                              {"w", Tensor::scalar(std::numeric_limits<double>::quiet_NaN())}},
                             0.1),
                    std::runtime_error);
    CHECK(store.get("w").value.item() == 1.0);
    CHECK(store.get("ln.gamma").value.item() == 1.0);
    CHECK(opt.moments().empty());
  }
}

TEST_CASE("checkpoint encoding") {
  TrainConfig cfg = testing::tiny_config();
  Trainer t(cfg, corpus_for(cfg));
  t.run(1);
  Checkpoint c = t.checkpoint();
  auto bytes = encode_checkpoint(c);
  Checkpoint d = decode_checkpoint(bytes);
  CHECK(d.step == 1);
  CHECK(d.seed == cfg.seed);
  CHECK(d.config_text == c.config_text);
  CHECK(same_params(c.params, d.params));
  CHECK(encode_checkpoint(d) == bytes);

  auto cut = bytes;
  cut.resize(cut.size() / 2);
  CHECK_THROWS_AS(decode_checkpoint(cut), CheckpointError);
  auto ver = bytes;
  ver[4] = 9;
  CHECK_THROWS_WITH_AS(decode_checkpoint(ver), doctest::Contains("version 9"), CheckpointError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), CheckpointError);
}

TEST_CASE("training is deterministic and losses are sane") {
  TrainConfig cfg = testing::tiny_config();
  auto data = corpus_for(cfg);
  Trainer a(cfg, data), b(cfg, data);
  auto la = a.run(4), lb = b.run(4);
  CHECK(same_logs(la, lb));
  CHECK(same_params(a.params(), b.params()));
  for (const auto& l : la) {
    CHECK(std::isfinite(l.total));
    CHECK(l.total > 0.0);
    CHECK(l.total == l.vtc + l.vtm + l.mlm + l.mvm);
  }
}

TEST_CASE("resume from a checkpoint continues bit-exactly") {
  TrainConfig cfg = testing::tiny_config();
  auto data = corpus_for(cfg);
  Trainer full(cfg, data);
  auto all = full.run(4);
  Trainer first(cfg, data);
  first.run(2);
  auto bytes = encode_checkpoint(first.checkpoint());
  Trainer resumed(decode_checkpoint(bytes), data);
  auto rest = resumed.run(2);
  CHECK(same_logs(rest, {all[2], all[3]}));
  CHECK(same_params(resumed.params(), full.params()));
}

TEST_CASE("single-frame runs bypass the temporal encoder and selector") {
  TrainConfig cfg = testing::tiny_config();
  Trainer t(cfg, corpus_for(cfg));
  diff::MacCounter counter;
  {
    diff::CountingSession session(counter);
    t.train_step();
  }
  CHECK(counter.total(tags::kTemporal) == 0);
  CHECK(counter.total(tags::kSelector) == 0);
  CHECK(counter.total(tags::kEncoder) > 0);
  CHECK(counter.total(tags::kFusion) > 0);
}

TEST_CASE("multi-frame run with selection and warm start") {
  TrainConfig single = testing::tiny_config();
  single.frames = 4;
  Trainer s(single, corpus_for(single));
  s.run(2);

  TrainConfig multi = single;
  multi.frames_per_clip = 4;
  multi.kappa = 2;
  multi.distractor_frac = 0.5;
  Trainer m(multi, corpus_for(multi));
  const std::size_t copied = m.warm_start(s.params());
  CHECK(copied == s.params().all().size());
  CHECK(same_params(m.params(), s.params()));
  diff::MacCounter counter;
  {
    diff::CountingSession session(counter);
    auto log = m.train_step();
    CHECK(std::isfinite(log.total));
  }
  CHECK(counter.total(tags::kTemporal) > 0);
  CHECK(counter.total(tags::kSelector) > 0);
  nn::Binding b(m.params(), nullptr);
  auto data = corpus_for(multi);
  auto sel = m.model().select_frames(b, data[0].clip, data[0].caption);
  CHECK(sel.indices.size() == 2);
}
