#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sefar/matrix.hpp"
#include "sefar/rng.hpp"

namespace sefar {

/// One sequence sample: N frames of D-dim feature vectors. The visible
/// label is absent on unlabeled samples; the underlying true class stays
/// reachable only through the evaluation accessor, which the training
/// path never calls.
class VideoSample {
 public:
  VideoSample() = default;
  VideoSample(Matrix frames, std::optional<int> visible_label, int true_label)
      : frames(std::move(frames)), label(visible_label), true_label_(true_label) {}

  Matrix frames;
  std::optional<int> label;

  void hide_label() { label.reset(); }

  /// Harness/metrics only. Not part of the training surface.
  int eval_true_label() const { return true_label_; }

 private:
  int true_label_ = -1;
};

/// Class recipe: a base envelope shared with the reversed partner (when one
/// exists) and a contiguous sub-motif window whose frame order defines the
/// class.
struct MotifSpec {
  int class_index = 0;
  Matrix canonical_frames;  // N x D, envelope with the motif applied
  int window_start = 0;
  int window_length = 0;
  std::optional<int> reversed_of;  // partner with identical envelope, reversed window
};

struct DatasetSpec {
  int num_classes = 8;
  int frames_per_sample = 8;
  int feature_dim = 16;
  int samples_per_class = 250;
  double noise_sigma = 0.1;
  int reversed_pair_count = 4;
  std::uint64_t seed = 1234;
};

struct SplitSpec {
  double label_ratio = 0.1;   // alpha in (0, 1]
  double test_fraction = 0.2;
  std::uint64_t seed = 1;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<VideoSample> samples;
  std::vector<MotifSpec> motifs;
};

struct SplitResult {
  std::vector<VideoSample> labeled;
  std::vector<VideoSample> unlabeled;  // labels hidden
  std::vector<VideoSample> test;
  // Index of each sample in the source dataset, for reproducible manifests.
  std::vector<std::size_t> labeled_indices;
  std::vector<std::size_t> unlabeled_indices;
  std::vector<std::size_t> test_indices;
};

void validate(const DatasetSpec& spec);
void validate(const SplitSpec& spec);

/// Deterministic under spec.seed; per-class streams are derived from
/// (seed, class) so parallel generation would equal the serial order.
Dataset generate_dataset(const DatasetSpec& spec);

/// Class-stratified partition into labeled / unlabeled / test. Labeled
/// count is ceil(alpha * train size) with at least one sample per class.
SplitResult split_by_ratio(const Dataset& data, const SplitSpec& split);

}  // namespace sefar
