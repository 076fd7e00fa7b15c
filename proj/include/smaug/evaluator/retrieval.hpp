#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "smaug/trainer/model.hpp"

namespace smaug::eval {

using diff::Tensor;

inline constexpr std::size_t kChoices = 5;

/// Fraction of rows whose ground-truth column (the row index) ranks within
/// the top k; ties go to the lower column index.
double recall_at_k(const Tensor& sim, std::size_t k);

/// Index of the highest of exactly five scores, lower index on ties.
std::size_t multiple_choice(std::span<const double> scores);

/// Text-to-video cosine similarities [B_text, B_video] of projected CLS embeddings.
Tensor similarity_matrix(const trainer::SmaugModel& model, const nn::ParamStore& params,
                         std::span<const vidio::VideoTextPair> pairs);

struct RetrievalReport {
  std::size_t n = 0;
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  /// Video query, true caption among four random distractor captions.
  double mc_accuracy = 0.0;
  Tensor sim;
};

RetrievalReport evaluate_retrieval(const trainer::SmaugModel& model, const nn::ParamStore& params,
                                   std::span<const vidio::VideoTextPair> pairs, std::uint64_t seed);

/// Fraction of clips whose inference-mode selection contains no distractor frame.
double selection_precision(const trainer::SmaugModel& model, const nn::ParamStore& params,
                           std::span<const vidio::VideoTextPair> pairs);

/// key=value lines (after `header`) and the similarity matrix as CSV.
void write_report(const std::filesystem::path& metrics_path, const std::filesystem::path& csv_path,
                  const RetrievalReport& report, const std::string& header);

}  // namespace smaug::eval
