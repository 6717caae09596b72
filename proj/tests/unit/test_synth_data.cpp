#include <cmath>
#include <set>

#include "doctest.h"
#include "sefar/synth_data.hpp"

using namespace sefar;

namespace {

DatasetSpec small_spec(double noise) {
  DatasetSpec spec;
  spec.num_classes = 4;
  spec.frames_per_sample = 8;
  spec.feature_dim = 6;
  spec.samples_per_class = 20;
  spec.noise_sigma = noise;
  spec.reversed_pair_count = 2;
  spec.seed = 77;
  return spec;
}

}  // namespace

TEST_SUITE("synth_data") {

TEST_CASE("noiseless samples of one class are identical") {
  Dataset data = generate_dataset(small_spec(0.0));
  const Matrix& a = data.samples[0].frames;
  const Matrix& b = data.samples[1].frames;
  REQUIRE(a.data.size() == b.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("reversed pair differs exactly by window frame order at zero noise") {
  Dataset data = generate_dataset(small_spec(0.0));
  const MotifSpec& m0 = data.motifs[0];
  const MotifSpec& m1 = data.motifs[1];
  REQUIRE(m0.reversed_of == 1);
  REQUIRE(m1.reversed_of == 0);
  REQUIRE(m0.window_start == m1.window_start);
  REQUIRE(m0.window_length == m1.window_length);

  const Matrix& a = data.samples[0].frames;                       // class 0
  const Matrix& b = data.samples[20].frames;                      // class 1
  const int s = m0.window_start;
  const int w = m0.window_length;
  for (std::size_t r = 0; r < a.rows; ++r) {
    const int ri = static_cast<int>(r);
    const std::size_t partner =
        (ri >= s && ri < s + w) ? static_cast<std::size_t>(s + (w - 1 - (ri - s))) : r;
    for (std::size_t c = 0; c < a.cols; ++c) {
      CHECK(a.at(r, c) == b.at(partner, c));
    }
  }
}

TEST_CASE("default-shaped spec yields exact class counts") {
  DatasetSpec spec;
  spec.num_classes = 8;
  spec.samples_per_class = 250;
  spec.reversed_pair_count = 4;
  Dataset data = generate_dataset(spec);
  CHECK(data.samples.size() == 2000);
  std::vector<int> counts(8, 0);
  for (const auto& s : data.samples) ++counts[static_cast<std::size_t>(s.eval_true_label())];
  for (int c : counts) CHECK(c == 250);
}

TEST_CASE("generation is deterministic under seed") {
  Dataset a = generate_dataset(small_spec(0.3));
  Dataset b = generate_dataset(small_spec(0.3));
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    for (std::size_t k = 0; k < a.samples[i].frames.data.size(); ++k) {
      CHECK(a.samples[i].frames.data[k] == b.samples[i].frames.data[k]);
    }
  }
}

TEST_CASE("noisy reversed-pair symmetry within the statistical envelope") {
  DatasetSpec spec = small_spec(0.25);
  spec.samples_per_class = 100;
  Dataset data = generate_dataset(spec);
  const MotifSpec& m0 = data.motifs[0];
  const int s = m0.window_start;
  const int w = m0.window_length;
  const int d = spec.feature_dim;

  // Mean squared difference over the window between class-0 samples and
  // window-reversed class-1 samples; bound 3 * sigma^2 * D * W from the
  // i.i.d. noise on both sides (expectation 2 * sigma^2 per entry).
  double total = 0.0;
  for (int i = 0; i < spec.samples_per_class; ++i) {
    const Matrix& a = data.samples[static_cast<std::size_t>(i)].frames;
    const Matrix& b = data.samples[static_cast<std::size_t>(spec.samples_per_class + i)].frames;
    for (int k = 0; k < w; ++k) {
      const auto ra = static_cast<std::size_t>(s + k);
      const auto rb = static_cast<std::size_t>(s + (w - 1 - k));
      for (int c = 0; c < d; ++c) {
        const double diff = a.at(ra, static_cast<std::size_t>(c)) -
                            b.at(rb, static_cast<std::size_t>(c));
        total += diff * diff;
      }
    }
  }
  const double mean_sq = total / spec.samples_per_class;
  CHECK(mean_sq < 3.0 * spec.noise_sigma * spec.noise_sigma * d * w);
}

TEST_CASE("split: alpha=1 and zero test fraction leaves no unlabeled") {
  Dataset data = generate_dataset(small_spec(0.1));
  SplitSpec split;
  split.label_ratio = 1.0;
  split.test_fraction = 0.0;
  SplitResult r = split_by_ratio(data, split);
  CHECK(r.unlabeled.empty());
  CHECK(r.test.empty());
  CHECK(r.labeled.size() == data.samples.size());
}

TEST_CASE("split arithmetic: 2000 train, alpha 0.1 -> 200/1800") {
  DatasetSpec spec;
  spec.num_classes = 8;
  spec.samples_per_class = 250;
  spec.reversed_pair_count = 4;
  Dataset data = generate_dataset(spec);
  SplitSpec split;
  split.label_ratio = 0.1;
  split.test_fraction = 0.0;
  SplitResult r = split_by_ratio(data, split);
  CHECK(r.labeled.size() == 200);
  CHECK(r.unlabeled.size() == 1800);
}

TEST_CASE("split: disjoint, exhaustive, stratified within one") {
  Dataset data = generate_dataset(small_spec(0.1));
  SplitSpec split;
  split.label_ratio = 0.3;
  split.test_fraction = 0.25;
  SplitResult r = split_by_ratio(data, split);

  std::set<std::size_t> seen;
  for (auto i : r.labeled_indices) seen.insert(i);
  for (auto i : r.unlabeled_indices) seen.insert(i);
  for (auto i : r.test_indices) seen.insert(i);
  CHECK(seen.size() == data.samples.size());
  CHECK(r.labeled.size() + r.unlabeled.size() + r.test.size() == data.samples.size());

  std::vector<int> labeled_per_class(4, 0);
  for (const auto& s : r.labeled) ++labeled_per_class[static_cast<std::size_t>(*s.label)];
  const auto [mn, mx] = std::minmax_element(labeled_per_class.begin(), labeled_per_class.end());
  CHECK(*mx - *mn <= 1);
}

TEST_CASE("split determinism: same seed gives identical membership") {
  Dataset data = generate_dataset(small_spec(0.1));
  SplitSpec split;
  SplitResult a = split_by_ratio(data, split);
  SplitResult b = split_by_ratio(data, split);
  CHECK(a.labeled_indices == b.labeled_indices);
  CHECK(a.unlabeled_indices == b.unlabeled_indices);
  CHECK(a.test_indices == b.test_indices);
}

TEST_CASE("hidden-label hygiene: unlabeled samples expose no label") {
  Dataset data = generate_dataset(small_spec(0.1));
  SplitSpec split;
  split.label_ratio = 0.2;
  SplitResult r = split_by_ratio(data, split);
  REQUIRE(!r.unlabeled.empty());
  for (const auto& s : r.unlabeled) {
    CHECK(!s.label.has_value());
    CHECK(s.eval_true_label() >= 0);  // still reachable for evaluation only
  }
  for (const auto& s : r.labeled) CHECK(s.label.has_value());
}

TEST_CASE("invalid specs are rejected") {
  DatasetSpec bad = small_spec(0.1);
  bad.reversed_pair_count = 3;  // 2*3 > 4 classes
  CHECK_THROWS_AS(generate_dataset(bad), std::invalid_argument);

  Dataset data = generate_dataset(small_spec(0.1));
  SplitSpec split;
  split.label_ratio = 0.0;
  CHECK_THROWS_AS(split_by_ratio(data, split), std::invalid_argument);
  split.label_ratio = 1.5;
  CHECK_THROWS_AS(split_by_ratio(data, split), std::invalid_argument);
}

}  // TEST_SUITE
