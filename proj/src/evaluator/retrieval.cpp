#include "smaug/evaluator/retrieval.hpp"

#include <fstream>
#include <numeric>
#include <stdexcept>

#include "smaug/diffcore/ops.hpp"
#include "smaug/objectives/losses.hpp"
#include "smaug/trainer/config.hpp"

namespace smaug::eval {

double recall_at_k(const Tensor& sim, std::size_t k) {
  if (sim.rank() != 2) throw diff::ShapeError("recall_at_k: expected a matrix, got " + diff::shape_str(sim.shape()));
  const std::size_t rows = sim.dim(0), cols = sim.dim(1);
  if (k == 0 || k > cols) {
    throw std::invalid_argument("recall_at_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(cols) + "]");
  }
  if (rows > cols) throw std::invalid_argument("recall_at_k: more queries than candidates");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double truth = sim.at(i, i);
    std::size_t rank = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double s = sim.at(i, j);
      if (s > truth || (s == truth && j < i)) ++rank;
    }
    hits += rank < k;
  }
  return static_cast<double>(hits) / static_cast<double>(rows);
}

std::size_t multiple_choice(std::span<const double> scores) {
  if (scores.size() != kChoices) {
    throw std::invalid_argument("multiple_choice: expected 5 candidates, got " + std::to_string(scores.size()));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

Tensor similarity_matrix(const trainer::SmaugModel& model, const nn::ParamStore& params,
                         std::span<const vidio::VideoTextPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("similarity_matrix: no pairs");
  nn::Binding b(params, nullptr);
  std::vector<Tensor> v, t;
  for (const auto& p : pairs) {
    v.push_back(model.video_embedding(b, p.clip));
    t.push_back(model.text_embedding(b, p.caption));
  }
  return objectives::cosine_similarity(diff::concat(t, 0), diff::concat(v, 0));
}

RetrievalReport evaluate_retrieval(const trainer::SmaugModel& model, const nn::ParamStore& params,
                                   std::span<const vidio::VideoTextPair> pairs, std::uint64_t seed) {
  RetrievalReport r;
  r.n = pairs.size();
  r.sim = similarity_matrix(model, params, pairs);
  r.r1 = recall_at_k(r.sim, 1);
  r.r5 = recall_at_k(r.sim, std::min<std::size_t>(5, r.n));
  r.r10 = recall_at_k(r.sim, std::min<std::size_t>(10, r.n));
  if (r.n >= kChoices) {
    Rng rng(seed, "multiple-choice");
    std::size_t correct = 0;
    for (std::size_t v = 0; v < r.n; ++v) {
      std::vector<std::size_t> others;
      for (auto o : rng.subset(r.n - 1, kChoices - 1)) others.push_back(o >= v ? o + 1 : o);
      const std::size_t slot = rng.below(kChoices);
      std::vector<std::size_t> cand;
      for (std::size_t c = 0, o = 0; c < kChoices; ++c) cand.push_back(c == slot ? v : others[o++]);
      std::vector<double> scores;
      for (auto c : cand) scores.push_back(r.sim.at(c, v));
      correct += multiple_choice(scores) == slot;
    }
    r.mc_accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  }
  return r;
}

double selection_precision(const trainer::SmaugModel& model, const nn::ParamStore& params,
                           std::span<const vidio::VideoTextPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("selection_precision: no pairs");
  nn::Binding b(params, nullptr);
  std::size_t clean = 0;
  for (const auto& p : pairs) {
    auto sel = model.select_frames(b, p.clip, p.caption);
    bool ok = true;
    for (auto i : sel.indices) ok = ok && !p.clip.distractor.at(i);
    clean += ok;
  }
  return static_cast<double>(clean) / static_cast<double>(pairs.size());
}

void write_report(const std::filesystem::path& metrics_path, const std::filesystem::path& csv_path,
                  const RetrievalReport& report, const std::string& header) {
  if (metrics_path.has_parent_path()) std::filesystem::create_directories(metrics_path.parent_path());
  std::ofstream m(metrics_path);
  if (!m) throw std::runtime_error("cannot write " + metrics_path.string());
  m << header;
  m << "n=" << report.n << "\n";
  m << "r1=" << trainer::format_double(report.r1) << "\n";
  m << "r5=" << trainer::format_double(report.r5) << "\n";
  m << "r10=" << trainer::format_double(report.r10) << "\n";
  m << "mc_accuracy=" << trainer::format_double(report.mc_accuracy) << "\n";
  std::ofstream c(csv_path);
  if (!c) throw std::runtime_error("cannot write " + csv_path.string());
  for (std::size_t i = 0; i < report.sim.dim(0); ++i) {
    for (std::size_t j = 0; j < report.sim.dim(1); ++j) {
      c << (j ? "," : "") << trainer::format_double(report.sim.at(i, j));
    }
    c << "\n";
  }
}

}  // namespace smaug::eval
