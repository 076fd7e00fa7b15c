#include "smaug/vit_encoder/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "smaug/diffcore/ops.hpp"

namespace smaug::vit {

using namespace diff;

namespace {

constexpr double kRowSumTolerance = 1e-4;

void check_rows(const double* p, std::size_t n, std::size_t rows) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += p[r * n + j];
    if (std::abs(s - 1.0) > kRowSumTolerance) {
      throw std::invalid_argument("cls_attention_mean: attention row " + std::to_string(r) + " sums to " +
                                  std::to_string(s) + ", expected 1");
    }
  }
}

}  // namespace

std::vector<double> cls_attention_mean(const Tensor& attention) {
  std::size_t h = 1, n = 0;
  if (attention.rank() == 2) {
    n = attention.dim(0);
    if (attention.dim(1) != n) throw ShapeError("cls_attention_mean: non-square " + shape_str(attention.shape()));
  } else if (attention.rank() == 3) {
    h = attention.dim(0);
    n = attention.dim(1);
    if (attention.dim(2) != n) throw ShapeError("cls_attention_mean: non-square " + shape_str(attention.shape()));
  } else {
    throw ShapeError("cls_attention_mean: expected [h, n, n], got " + shape_str(attention.shape()));
  }
  const double* p = attention.data().data();
  check_rows(p, n, h * n);
  std::vector<double> abar(n - 1, 0.0);
  for (std::size_t head = 0; head < h; ++head) {
    const double* cls_row = p + head * n * n;
    for (std::size_t j = 1; j < n; ++j) abar[j - 1] += cls_row[j];
  }
  for (auto& a : abar) a /= static_cast<double>(h);
  return abar;
}

std::vector<double> cls_attention_mean(const std::vector<Tensor>& per_head) {
  if (per_head.empty()) throw std::invalid_argument("cls_attention_mean: no heads");
  const Shape s = per_head[0].shape();
  std::vector<double> stacked;
  for (const auto& t : per_head) {
    if (t.shape() != s) throw ShapeError("cls_attention_mean: head shapes differ");
    stacked.insert(stacked.end(), t.data().begin(), t.data().end());
  }
  return cls_attention_mean(Tensor({per_head.size(), s.at(0), s.at(1)}, std::move(stacked)));
}

std::size_t keep_count(std::size_t n, double gamma) {
  // The small slack keeps products such as 0.7 * 70 from landing just below an integer.
  const auto k = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n) + 1e-9));
  return std::max<std::size_t>(1, std::min(k, n));
}

std::vector<std::size_t> top_k_positions(std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  k = std::min(k, values.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

SparsifyResult sparsify(const Tensor& tokens, std::span<const double> abar, double gamma,
                        std::span<const long> origin, const std::vector<Tensor>* head_probs) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("sparsify: keeping rate " + std::to_string(gamma) + " outside (0, 1]");
  }
  if (tokens.rank() != 2) throw ShapeError("sparsify: expected [n, d], got " + shape_str(tokens.shape()));
  const std::size_t n = tokens.dim(0);
  SparsifyResult r;
  r.origin.assign(origin.begin(), origin.end());
  if (r.origin.size() != n) {
    throw std::invalid_argument("sparsify: " + std::to_string(origin.size()) + " origins for " + std::to_string(n) +
                                " tokens");
  }
  r.tokens = tokens;
  if (n < 3 || gamma == 1.0) return r;
  const std::size_t m = n - 1;
  if (abar.size() != m) {
    throw std::invalid_argument("sparsify: " + std::to_string(abar.size()) + " attention values for " +
                                std::to_string(m) + " tokens");
  }
  const std::size_t k = keep_count(m, gamma);
  auto& tr = r.trace;
  tr.attentive_idx = top_k_positions(abar, k);
  std::vector<bool> kept(m, false);
  for (auto p : tr.attentive_idx) kept[p] = true;
  for (std::size_t p = 0; p < m; ++p) {
    if (!kept[p]) {
      tr.inattentive_idx.push_back(p);
      tr.fused_weights.push_back(abar[p]);
    }
  }
  std::vector<std::size_t> keep_rows{0};
  std::vector<long> new_origin{r.origin[0]};
  for (auto p : tr.attentive_idx) {
    keep_rows.push_back(p + 1);
    new_origin.push_back(r.origin[p + 1]);
    tr.attentive_origin.push_back(r.origin[p + 1]);
  }
  std::vector<Tensor> parts{gather_rows(tokens, keep_rows)};
  if (!tr.inattentive_idx.empty()) {
    std::vector<std::size_t> fuse_rows;
    for (auto p : tr.inattentive_idx) fuse_rows.push_back(p + 1);
    Tensor coeff;
    if (head_probs && !head_probs->empty()) {
      const std::size_t zero = 0;
      Tensor acc;
      for (const auto& p : *head_probs) {
        Tensor row = transpose(gather_rows(p, std::span<const std::size_t>(&zero, 1)));
        acc = acc.defined() ? add(acc, row) : row;
      }
      acc = scale(acc, 1.0 / static_cast<double>(head_probs->size()));
      const Tensor au = gather_rows(acc, fuse_rows);
      coeff = transpose(scale_by(au, reciprocal(sum_all(au))));
    } else {
      const double total = std::accumulate(tr.fused_weights.begin(), tr.fused_weights.end(), 0.0);
      std::vector<double> w(tr.fused_weights);
      for (auto& x : w) x = total > 0.0 ? x / total : 1.0 / static_cast<double>(w.size());
      const std::size_t u = w.size();
      coeff = Tensor({1, u}, std::move(w));
    }
    parts.push_back(matmul(coeff, gather_rows(tokens, fuse_rows)));
    new_origin.push_back(kFusedOrigin);
  }
  r.tokens = concat(parts, 0);
  r.origin = std::move(new_origin);
  return r;
}

}  // namespace smaug::vit
