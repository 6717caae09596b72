#pragma once

#include <utility>
#include <vector>

#include "sefar/matrix.hpp"
#include "sefar/rng.hpp"
#include "sefar/synth_data.hpp"

namespace sefar {

struct ElementConfig {
  int representative_frames = 8;        // K
  std::vector<int> fine_lengths = {2, 2};
  int context_length = 4;
};

void validate(const ElementConfig& cfg);

/// Index structure of one sample's elements. Positions index into the K
/// representative frames. Freshly built plans have strictly increasing
/// positions; augmented plans may permute or repeat them.
struct ElementPlan {
  std::vector<int> representative_indices;       // K video frame indices
  std::vector<std::vector<int>> fine_positions;  // M lists, fine_positions[i].size() == fine_lengths[i]
  std::vector<int> context_positions;            // context_length entries
};

/// Materialized element tensors for a batch of samples sharing layout:
/// fine[i] is B x (fine_lengths[i] * D), context is B x (context_length * D).
struct ElementBatch {
  std::vector<Matrix> fine;
  Matrix context;

  std::size_t batch_size() const { return context.rows; }
};

/// Partition [0, N) into K contiguous half-open ranges whose sizes differ
/// by at most one, larger ranges first.
std::vector<std::pair<int, int>> segment_frames(int num_frames, int num_segments);

/// One uniformly random frame index per segment; strictly increasing.
std::vector<int> sample_representative_frames(int num_frames, int num_segments, RngStream rng);

/// Uniform-stride element positions: step = floor(K / L), offset drawn
/// uniformly from the feasible range. Fine elements of equal length draw
/// offsets without replacement while the offset space allows it.
ElementPlan build_elements(const ElementConfig& cfg, int num_frames, RngStream rng);

/// One sample's element tensors (batch of one). Element tensors are the
/// selected frames' feature rows concatenated in plan order.
ElementBatch materialize(const VideoSample& video, const ElementPlan& plan);

/// Stacks per-sample materializations; plans[i] applies to videos[i].
ElementBatch materialize_batch(const std::vector<const VideoSample*>& videos,
                               const std::vector<ElementPlan>& plans);

Matrix extract_row(const ElementBatch& batch, std::size_t row, std::size_t element);
ElementBatch take_row(const ElementBatch& batch, std::size_t row);

}  // namespace sefar
