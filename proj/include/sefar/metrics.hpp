#pragma once

#include <optional>
#include <vector>

#include "sefar/ssl.hpp"

namespace sefar {

struct EvalReport {
  double top1 = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  std::size_t sample_count = 0;
};

/// Fraction of exact matches. Inputs must be nonempty and equal length.
double top1_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// C x C counts, entry (t, p) = samples with true class t predicted p.
std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& predicted,
                                               const std::vector<int>& truth, int num_classes);

EvalReport evaluate(const std::vector<int>& predicted, const std::vector<int>& truth,
                    int num_classes);

struct ConfidenceBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::size_t correct = 0;
};

struct TeacherFluctuationReport {
  // Mean sigma* split by pseudo-label correctness; absent when a group is
  // empty.
  std::optional<double> mean_sigma_correct;
  std::optional<double> mean_sigma_wrong;
  std::vector<ConfidenceBin> confidence_bins;  // 10 uniform bins over [0,1]
  std::size_t sample_count = 0;
};

/// Stats rows paired with the evaluation-only true labels of the same
/// samples.
TeacherFluctuationReport teacher_fluctuation(const std::vector<TeacherStatsRow>& stats,
                                             const std::vector<int>& true_labels);

constexpr int kConfidenceBinCount = 10;

}  // namespace sefar
