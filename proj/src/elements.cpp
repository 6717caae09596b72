#include "sefar/elements.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sefar {

void validate(const ElementConfig& cfg) {
  if (cfg.representative_frames < 1) {
    throw std::invalid_argument("ElementConfig: representative_frames must be >= 1");
  }
  int max_fine = 0;
  for (int l : cfg.fine_lengths) {
    if (l < 1 || l > cfg.representative_frames) {
      throw std::invalid_argument("ElementConfig: fine length " + std::to_string(l) +
                                  " outside [1, K]");
    }
    max_fine = std::max(max_fine, l);
  }
  if (cfg.context_length < 1 || cfg.context_length > cfg.representative_frames) {
    throw std::invalid_argument("ElementConfig: context_length outside [1, K]");
  }
  if (cfg.context_length < max_fine) {
    throw std::invalid_argument("ElementConfig: context_length must be >= max fine length");
  }
}

std::vector<std::pair<int, int>> segment_frames(int num_frames, int num_segments) {
  if (num_segments < 1) throw std::invalid_argument("segment_frames: num_segments must be >= 1");
  if (num_frames < num_segments) {
    throw std::invalid_argument("segment_frames: need num_frames >= num_segments (" +
                                std::to_string(num_frames) + " < " +
                                std::to_string(num_segments) + ")");
  }
  const int base = num_frames / num_segments;
  const int remainder = num_frames % num_segments;
  std::vector<std::pair<int, int>> ranges;
  ranges.reserve(static_cast<std::size_t>(num_segments));
  int lo = 0;
  for (int s = 0; s < num_segments; ++s) {
    const int size = base + (s < remainder ? 1 : 0);
    ranges.emplace_back(lo, lo + size);
    lo += size;
  }
  return ranges;
}

std::vector<int> sample_representative_frames(int num_frames, int num_segments, RngStream rng) {
  const auto ranges = segment_frames(num_frames, num_segments);
  std::vector<int> indices;
  indices.reserve(ranges.size());
  for (const auto& [lo, hi] : ranges) {
    indices.push_back(lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(hi - lo))));
  }
  return indices;
}

namespace {

std::vector<int> strided_positions(int offset, int length, int step) {
  std::vector<int> pos(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) pos[static_cast<std::size_t>(i)] = offset + i * step;
  return pos;
}

}  // namespace

ElementPlan build_elements(const ElementConfig& cfg, int num_frames, RngStream rng) {
  validate(cfg);
  const int k = cfg.representative_frames;

  ElementPlan plan;
  plan.representative_indices = sample_representative_frames(num_frames, k, rng.substream(0));

  // Group fine elements of equal length so their offsets can be drawn
  // without replacement from the shared offset space.
  plan.fine_positions.resize(cfg.fine_lengths.size());
  std::vector<std::size_t> order(cfg.fine_lengths.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream fine_rng = rng.substream(1);
  std::vector<bool> done(cfg.fine_lengths.size(), false);
  for (std::size_t i = 0; i < cfg.fine_lengths.size(); ++i) {
    if (done[i]) continue;
    const int len = cfg.fine_lengths[i];
    std::vector<std::size_t> group;
    for (std::size_t j = i; j < cfg.fine_lengths.size(); ++j) {
      if (!done[j] && cfg.fine_lengths[j] == len) group.push_back(j);
    }
    const int step = k / len;
    const int space = k - (len - 1) * step;  // offsets in [0, space)
    if (group.size() <= static_cast<std::size_t>(space)) {
      // Partial Fisher-Yates over [0, space): first |group| entries.
      std::vector<int> pool(static_cast<std::size_t>(space));
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t g = 0; g < group.size(); ++g) {
        const std::size_t pick = g + static_cast<std::size_t>(
            fine_rng.next_below(static_cast<std::uint64_t>(pool.size() - g)));
        std::swap(pool[g], pool[pick]);
        plan.fine_positions[group[g]] = strided_positions(pool[g], len, step);
        done[group[g]] = true;
      }
    } else {
      for (std::size_t g = 0; g < group.size(); ++g) {
        const int offset = static_cast<int>(fine_rng.next_below(static_cast<std::uint64_t>(space)));
        plan.fine_positions[group[g]] = strided_positions(offset, len, step);
        done[group[g]] = true;
      }
    }
  }

  const int ctx_step = k / cfg.context_length;
  const int ctx_space = k - (cfg.context_length - 1) * ctx_step;
  RngStream ctx_rng = rng.substream(2);
  const int ctx_offset = static_cast<int>(ctx_rng.next_below(static_cast<std::uint64_t>(ctx_space)));
  plan.context_positions = strided_positions(ctx_offset, cfg.context_length, ctx_step);
  return plan;
}

namespace {

void fill_element_row(double* dst, const VideoSample& video, const ElementPlan& plan,
                      const std::vector<int>& positions) {
  const Matrix& frames = video.frames;
  for (int pos : positions) {
    if (pos < 0 || static_cast<std::size_t>(pos) >= plan.representative_indices.size()) {
      throw std::out_of_range("materialize: element position " + std::to_string(pos) +
                              " outside representative range");
    }
    const int frame = plan.representative_indices[static_cast<std::size_t>(pos)];
    if (frame < 0 || static_cast<std::size_t>(frame) >= frames.rows) {
      throw std::out_of_range("materialize: frame index " + std::to_string(frame) +
                              " outside video");
    }
    const double* src = frames.row_ptr(static_cast<std::size_t>(frame));
    dst = std::copy(src, src + frames.cols, dst);
  }
}

}  // namespace

ElementBatch materialize(const VideoSample& video, const ElementPlan& plan) {
  return materialize_batch({&video}, {plan});
}

ElementBatch materialize_batch(const std::vector<const VideoSample*>& videos,
                               const std::vector<ElementPlan>& plans) {
  if (videos.empty() || videos.size() != plans.size()) {
    throw std::invalid_argument("materialize_batch: videos/plans mismatch");
  }
  const std::size_t batch = videos.size();
  const std::size_t feat = videos.front()->frames.cols;
  const std::size_t num_fine = plans.front().fine_positions.size();

  ElementBatch out;
  out.fine.reserve(num_fine);
  for (std::size_t e = 0; e < num_fine; ++e) {
    out.fine.emplace_back(batch, plans.front().fine_positions[e].size() * feat);
  }
  out.context = Matrix(batch, plans.front().context_positions.size() * feat);

  for (std::size_t b = 0; b < batch; ++b) {
    const ElementPlan& plan = plans[b];
    if (plan.fine_positions.size() != num_fine) {
      throw std::invalid_argument("materialize_batch: inconsistent fine element counts");
    }
    for (std::size_t e = 0; e < num_fine; ++e) {
      if (plan.fine_positions[e].size() * feat != out.fine[e].cols) {
        throw std::invalid_argument("materialize_batch: inconsistent fine element lengths");
      }
      fill_element_row(out.fine[e].row_ptr(b), *videos[b], plan, plan.fine_positions[e]);
    }
    if (plan.context_positions.size() * feat != out.context.cols) {
      throw std::invalid_argument("materialize_batch: inconsistent context lengths");
    }
    fill_element_row(out.context.row_ptr(b), *videos[b], plan, plan.context_positions);
  }
  return out;
}

Matrix extract_row(const ElementBatch& batch, std::size_t row, std::size_t element) {
  const Matrix& src = element < batch.fine.size() ? batch.fine[element] : batch.context;
  Matrix out(1, src.cols);
  std::copy(src.row_ptr(row), src.row_ptr(row) + src.cols, out.data.begin());
  return out;
}

ElementBatch take_row(const ElementBatch& batch, std::size_t row) {
  ElementBatch out;
  for (std::size_t e = 0; e < batch.fine.size(); ++e) {
    out.fine.push_back(extract_row(batch, row, e));
  }
  out.context = extract_row(batch, row, batch.fine.size());
  return out;
}

}  // namespace sefar
