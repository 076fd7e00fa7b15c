#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "../support/test_util.hpp"
#include "smaug/diffcore/gradcheck.hpp"
#include "smaug/diffcore/ops.hpp"
#include "smaug/diffcore/tape.hpp"
#include "smaug/objectives/losses.hpp"

using namespace smaug;
using namespace smaug::objectives;
using diff::Tensor;

namespace {

// Double-loop reference of the symmetric contrastive loss.
std::pair<double, double> naive_vtc(const Tensor& v, const Tensor& t, double tau) {
  const std::size_t b = v.dim(0), p = v.dim(1);
  auto norm_rows = [&](const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < b; ++i) {
      double n = 0.0;
      for (std::size_t j = 0; j < p; ++j) n += x.at(i, j) * x.at(i, j);
      n = std::sqrt(n);
      for (std::size_t j = 0; j < p; ++j) out[i * p + j] = x.at(i, j) / n;
    }
    return out;
  };
  auto vn = norm_rows(v), tn = norm_rows(t);
  std::vector<double> s(b * b, 0.0);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t k = 0; k < p; ++k) s[i * b + j] += vn[i * p + k] * tn[j * p + k];
  double v2t = 0.0, t2v = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double rs = 0.0, cs = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      rs += std::exp(s[i * b + j] / tau);
      cs += std::exp(s[j * b + i] / tau);
    }
    v2t -= std::log(std::exp(s[i * b + i] / tau) / rs);
    t2v -= std::log(std::exp(s[i * b + i] / tau) / cs);
  }
  return {v2t / b, t2v / b};
}

}  // namespace

TEST_CASE("vtc single pair is exactly zero") {
  Rng rng(1);
  CHECK(vtc_loss(testing::random_tensor(rng, {1, 6}), testing::random_tensor(rng, {1, 6})).item() == 0.0);
}

TEST_CASE("vtc closed form for a diagonal similarity") {
  Tensor s = Tensor::matrix({{1, 0}, {0, 1}});
  const double expect = -std::log(std::exp(1 / 0.07) / (std::exp(1 / 0.07) + 1.0));
  CHECK(vtc_from_similarity(s).loss.item() == doctest::Approx(expect).epsilon(1e-9));
  CHECK(expect == doctest::Approx(6.2e-7).epsilon(0.01));
}

TEST_CASE("vtc matches the double-loop reference") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed, "vtc");
    Tensor v = testing::random_tensor(rng, {8, 5}), t = testing::random_tensor(rng, {8, 5});
    auto parts = vtc_parts(v, t);
    auto [v2t, t2v] = naive_vtc(v, t, kTemperature);
    CHECK(std::abs(parts.v2t.item() - v2t) <= 1e-10);
    CHECK(std::abs(parts.t2v.item() - t2v) <= 1e-10);
    CHECK(std::abs(parts.loss.item() - 0.5 * (v2t + t2v)) <= 1e-10);
  }
}

TEST_CASE("vtc symmetry and permutation invariance") {
  Rng rng(2);
  Tensor v = testing::random_tensor(rng, {6, 4}), t = testing::random_tensor(rng, {6, 4});
  auto a = vtc_parts(v, t), b = vtc_parts(t, v);
  CHECK(a.v2t.item() == doctest::Approx(b.t2v.item()).epsilon(1e-14));
  CHECK(a.t2v.item() == doctest::Approx(b.v2t.item()).epsilon(1e-14));
  CHECK(a.loss.item() == doctest::Approx(b.loss.item()).epsilon(1e-14));
  std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  auto c = vtc_parts(diff::gather_rows(v, perm), diff::gather_rows(t, perm));
  CHECK(c.loss.item() == doctest::Approx(a.loss.item()).epsilon(1e-13));
}

TEST_CASE("vtc decreases as the diagonal margin grows") {
  double prev = 1e300;
  for (double m = 0.0; m <= 1.0; m += 0.1) {
    Tensor s = Tensor::matrix({{m, 0, 0}, {0, m, 0}, {0, 0, m}});
    const double l = vtc_from_similarity(s).loss.item();
    CHECK(l < prev);
    prev = l;
  }
}

TEST_CASE("vtc gradients") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, "vtc-grad");
    Tensor v = testing::random_tensor(rng, {4, 3}), t = testing::random_tensor(rng, {4, 3});
    CHECK(diff::finite_diff_check([&](const Tensor& x) { return vtc_loss(x, t); }, v, 1e-5).pass);
  }
}

TEST_CASE("vtm loss") {
  std::vector<std::size_t> labels{1, 0};
  CHECK(vtm_loss(Tensor::matrix({{-10, 10}, {10, -10}}), labels).item() < 1e-4);
  CHECK(vtm_loss(Tensor::matrix({{0, 0}, {0, 0}}), labels).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  Rng rng(3);
  Tensor logits = testing::random_tensor(rng, {5, 2});
  std::vector<std::size_t> y{1, 1, 0, 1, 0};
  double ref = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double a = logits.at(i, 0), b = logits.at(i, 1);
    ref -= logits.at(i, y[i]) - std::log(std::exp(a) + std::exp(b));
  }
  CHECK(vtm_loss(logits, y).item() == doctest::Approx(ref / 5).epsilon(1e-13));
  CHECK_THROWS(vtm_loss(logits, std::vector<std::size_t>{2, 0, 0, 0, 0}));
}

TEST_CASE("mlm loss") {
  const std::size_t v = 31;
  std::vector<std::size_t> targets{4, 9};
  std::vector<double> sharp(2 * v, -10.0);
  sharp[4] = 10.0;
  sharp[v + 9] = 10.0;
  CHECK(mlm_loss(Tensor({2, v}, sharp), targets).item() < 1e-6);
  CHECK(mlm_loss(Tensor::zeros({2, v}), targets).item() == doctest::Approx(std::log(31.0)).epsilon(1e-14));
  Rng rng(4);
  Tensor logits = testing::random_tensor(rng, {2, v});
  double ref = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) z += std::exp(logits.at(i, j));
    ref -= logits.at(i, targets[i]) - std::log(z);
  }
  CHECK(mlm_loss(logits, targets).item() == doctest::Approx(ref / 2).epsilon(1e-13));

  diff::Tape tape;
  Tensor empty = mlm_loss(Tensor(), {});
  CHECK(empty.item() == 0.0);
  CHECK_FALSE(empty.requires_grad());
}

TEST_CASE("total loss is the exact sum and gradients add") {
  auto b = total_loss(Tensor::scalar(1), Tensor::scalar(2), Tensor::scalar(3), Tensor::scalar(4));
  CHECK(b.total.item() == 10.0);

  Rng rng(5);
  Tensor x0 = testing::random_tensor(rng, {3, 2});
  std::vector<std::size_t> lab{1, 0, 1};
  auto parts = [&](const Tensor& x) {
    return std::vector<Tensor>{vtc_loss(x, diff::scale(x, 0.5)), vtm_loss(x, lab),
                               mlm_loss(x, std::vector<std::size_t>{0, 1, 1}), diff::mse(x, Tensor::zeros({3, 2}))};
  };
  diff::Tape tape;
  Tensor leaf = tape.leaf(x0);
  auto p = parts(leaf);
  Tensor total_grad = tape.backward(total_loss(p[0], p[1], p[2], p[3]).total).grad(leaf);
  std::vector<double> summed(x0.size(), 0.0);
  for (std::size_t c = 0; c < 4; ++c) {
    diff::Tape t2;
    Tensor l2 = t2.leaf(x0);
    Tensor g = t2.backward(parts(l2)[c]).grad(l2);
    for (std::size_t i = 0; i < summed.size(); ++i) summed[i] += g[i];
  }
  for (std::size_t i = 0; i < summed.size(); ++i) CHECK(total_grad[i] == doctest::Approx(summed[i]).epsilon(1e-12));

  // Dropping one component's dependence on x removes exactly its contribution.
  diff::Tape t3;
  Tensor l3 = t3.leaf(x0);
  auto q = parts(l3);
  q[3] = diff::mse(x0, Tensor::zeros({3, 2}));
  Tensor ablated = t3.backward(total_loss(q[0], q[1], q[2], q[3]).total).grad(l3);
  diff::Tape t4;
  Tensor l4 = t4.leaf(x0);
  Tensor mvm_only = t4.backward(parts(l4)[3]).grad(l4);
  for (std::size_t i = 0; i < summed.size(); ++i) {
    CHECK(ablated[i] == doctest::Approx(total_grad[i] - mvm_only[i]).epsilon(1e-12));
  }
}
