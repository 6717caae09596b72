#include "sefar/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace sefar {

double top1_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.empty()) throw std::invalid_argument("top1_accuracy: empty input");
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("top1_accuracy: length mismatch");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& predicted,
                                               const std::vector<int>& truth, int num_classes) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("confusion_matrix: length mismatch");
  }
  std::vector<std::vector<int>> m(static_cast<std::size_t>(num_classes),
                                  std::vector<int>(static_cast<std::size_t>(num_classes), 0));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw std::invalid_argument("confusion_matrix: label out of range");
    }
    ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

EvalReport evaluate(const std::vector<int>& predicted, const std::vector<int>& truth,
                    int num_classes) {
  EvalReport report;
  report.confusion = confusion_matrix(predicted, truth, num_classes);
  report.sample_count = predicted.size();
  report.top1 = top1_accuracy(predicted, truth);
  report.per_class_accuracy.resize(static_cast<std::size_t>(num_classes), 0.0);
  for (int c = 0; c < num_classes; ++c) {
    const auto& row = report.confusion[static_cast<std::size_t>(c)];
    int total = 0;
    for (int v : row) total += v;
    report.per_class_accuracy[static_cast<std::size_t>(c)] =
        total > 0 ? static_cast<double>(row[static_cast<std::size_t>(c)]) / total : 0.0;
  }
  return report;
}

TeacherFluctuationReport teacher_fluctuation(const std::vector<TeacherStatsRow>& stats,
                                             const std::vector<int>& true_labels) {
  if (stats.size() != true_labels.size()) {
    throw std::invalid_argument("teacher_fluctuation: stats/labels misaligned");
  }
  TeacherFluctuationReport report;
  report.sample_count = stats.size();
  report.confidence_bins.resize(kConfidenceBinCount);
  for (int b = 0; b < kConfidenceBinCount; ++b) {
    report.confidence_bins[static_cast<std::size_t>(b)].lo =
        static_cast<double>(b) / kConfidenceBinCount;
    report.confidence_bins[static_cast<std::size_t>(b)].hi =
        static_cast<double>(b + 1) / kConfidenceBinCount;
  }

  double sigma_correct = 0.0;
  double sigma_wrong = 0.0;
  std::size_t n_correct = 0;
  std::size_t n_wrong = 0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const bool correct = stats[i].pseudo_label == true_labels[i];
    if (correct) {
      sigma_correct += stats[i].sigma_star;
      ++n_correct;
    } else {
      sigma_wrong += stats[i].sigma_star;
      ++n_wrong;
    }
    // Confidence 1.0 lands in the last bin.
    int b = static_cast<int>(stats[i].confidence * kConfidenceBinCount);
    b = std::clamp(b, 0, kConfidenceBinCount - 1);
    auto& bin = report.confidence_bins[static_cast<std::size_t>(b)];
    ++bin.count;
    if (correct) ++bin.correct;
  }
  if (n_correct > 0) report.mean_sigma_correct = sigma_correct / static_cast<double>(n_correct);
  if (n_wrong > 0) report.mean_sigma_wrong = sigma_wrong / static_cast<double>(n_wrong);
  return report;
}

}  // namespace sefar
