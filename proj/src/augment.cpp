#include "sefar/augment.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_map>

namespace sefar {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

AugmentKind augment_kind_from_string(const std::string& name) {
  static const std::unordered_map<std::string, AugmentKind> table = {
      {"weak", AugmentKind::kWeak},
      {"mod_perturb", AugmentKind::kModPerturb},
      {"modperturb", AugmentKind::kModPerturb},
      {"spatial_only", AugmentKind::kSpatialOnly},
      {"spatialonly", AugmentKind::kSpatialOnly},
      {"slow_tdrop", AugmentKind::kSlowTDrop},
      {"slowtdrop", AugmentKind::kSlowTDrop},
      {"all_shuffle", AugmentKind::kAllShuffle},
      {"allshuffle", AugmentKind::kAllShuffle},
      {"local_shuffle", AugmentKind::kLocalShuffle},
      {"localshuffle", AugmentKind::kLocalShuffle},
      {"warping", AugmentKind::kWarping},
      {"t_half", AugmentKind::kTHalf},
      {"thalf", AugmentKind::kTHalf},
      {"all_reverse", AugmentKind::kAllReverse},
      {"allreverse", AugmentKind::kAllReverse},
  };
  auto it = table.find(lowercase(name));
  if (it == table.end()) throw std::invalid_argument("unknown augmentation strategy: " + name);
  return it->second;
}

std::string to_string(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::kWeak: return "weak";
    case AugmentKind::kModPerturb: return "mod_perturb";
    case AugmentKind::kSpatialOnly: return "spatial_only";
    case AugmentKind::kSlowTDrop: return "slow_tdrop";
    case AugmentKind::kAllShuffle: return "all_shuffle";
    case AugmentKind::kLocalShuffle: return "local_shuffle";
    case AugmentKind::kWarping: return "warping";
    case AugmentKind::kTHalf: return "t_half";
    case AugmentKind::kAllReverse: return "all_reverse";
  }
  throw std::invalid_argument("unknown AugmentKind");
}

const std::vector<AugmentKind>& strong_augment_kinds() {
  static const std::vector<AugmentKind> kinds = {
      AugmentKind::kSpatialOnly, AugmentKind::kSlowTDrop,  AugmentKind::kAllShuffle,
      AugmentKind::kLocalShuffle, AugmentKind::kWarping,   AugmentKind::kTHalf,
      AugmentKind::kAllReverse,  AugmentKind::kModPerturb,
  };
  return kinds;
}

void validate(const WeakAugConfig& cfg) {
  if (cfg.jitter_sigma < 0.0) throw std::invalid_argument("WeakAugConfig: jitter_sigma < 0");
  if (!(cfg.scale_lo > 0.0) || cfg.scale_lo > cfg.scale_hi) {
    throw std::invalid_argument("WeakAugConfig: need 0 < scale_lo <= scale_hi");
  }
}

ElementBatch weak_augment(const ElementBatch& batch, const WeakAugConfig& cfg, RngStream rng) {
  validate(cfg);
  ElementBatch out = batch;
  auto perturb_row = [&cfg](double* row, std::size_t n, double scale, RngStream& r) {
    if (scale != 1.0) {
      for (std::size_t j = 0; j < n; ++j) row[j] *= scale;
    }
    if (cfg.jitter_sigma > 0.0) {
      for (std::size_t j = 0; j < n; ++j) row[j] += cfg.jitter_sigma * r.next_gaussian();
    }
  };
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    const double scale =
        cfg.scale_lo == cfg.scale_hi ? cfg.scale_lo : rng.next_uniform(cfg.scale_lo, cfg.scale_hi);
    for (Matrix& m : out.fine) perturb_row(m.row_ptr(b), m.cols, scale, rng);
    perturb_row(out.context.row_ptr(b), out.context.cols, scale, rng);
  }
  return out;
}

ElementPlan strong_augment_mod_perturb(const ElementPlan& plan) {
  ElementPlan out = plan;
  for (auto& positions : out.fine_positions) {
    std::reverse(positions.begin(), positions.end());
  }
  return out;
}

namespace {

void shuffle_positions(std::vector<int>& positions, RngStream& rng) {
  for (std::size_t i = positions.size(); i > 1; --i) {
    std::swap(positions[i - 1], positions[rng.next_below(i)]);
  }
}

// Keep even slots, duplicating each to fill the original length
// (half-speed playback).
void slow_tdrop(std::vector<int>& positions) {
  const std::size_t n = positions.size();
  std::vector<int> evens;
  for (std::size_t i = 0; i < n; i += 2) evens.push_back(positions[i]);
  for (std::size_t i = 0; i < n; ++i) positions[i] = evens[i / 2];
}

void warp(std::vector<int>& positions, RngStream& rng) {
  std::vector<int> resampled(positions.size());
  for (auto& p : resampled) {
    p = positions[rng.next_below(positions.size())];
  }
  std::sort(resampled.begin(), resampled.end());
  positions = std::move(resampled);
}

// Reverse the second half, indices [ceil(n/2), n).
void t_half(std::vector<int>& positions) {
  std::reverse(positions.begin() + static_cast<std::ptrdiff_t>((positions.size() + 1) / 2),
               positions.end());
}

// Rebuild each element tensor by gathering the per-frame blocks of the old
// tensor according to the new position list. Valid because pre-augmentation
// position lists have unique entries.
Matrix regather(const Matrix& old_tensor, const std::vector<int>& old_positions,
                const std::vector<int>& new_positions) {
  const std::size_t feat = old_tensor.cols / old_positions.size();
  Matrix out(old_tensor.rows, new_positions.size() * feat);
  for (std::size_t b = 0; b < old_tensor.rows; ++b) {
    const double* src_row = old_tensor.row_ptr(b);
    double* dst = out.row_ptr(b);
    for (int pos : new_positions) {
      const auto it = std::find(old_positions.begin(), old_positions.end(), pos);
      if (it == old_positions.end()) {
        throw std::invalid_argument("apply_strategy: position not present in source element");
      }
      const auto block = static_cast<std::size_t>(it - old_positions.begin());
      dst = std::copy(src_row + block * feat, src_row + (block + 1) * feat, dst);
    }
  }
  return out;
}

}  // namespace

ElementPlan apply_strategy_plan(AugmentKind kind, const ElementPlan& plan, RngStream rng) {
  ElementPlan out = plan;
  switch (kind) {
    case AugmentKind::kWeak:
      throw std::invalid_argument("apply_strategy: Weak has its own op");
    case AugmentKind::kModPerturb:
      return strong_augment_mod_perturb(plan);
    case AugmentKind::kSpatialOnly:
      return out;
    case AugmentKind::kSlowTDrop:
      for (auto& p : out.fine_positions) slow_tdrop(p);
      slow_tdrop(out.context_positions);
      return out;
    case AugmentKind::kAllShuffle: {
      std::uint64_t k = 0;
      for (auto& p : out.fine_positions) {
        RngStream r = rng.substream(k++);
        shuffle_positions(p, r);
      }
      RngStream r = rng.substream(k);
      shuffle_positions(out.context_positions, r);
      return out;
    }
    case AugmentKind::kLocalShuffle: {
      std::uint64_t k = 0;
      for (auto& p : out.fine_positions) {
        RngStream r = rng.substream(k++);
        shuffle_positions(p, r);
      }
      return out;
    }
    case AugmentKind::kWarping: {
      std::uint64_t k = 0;
      for (auto& p : out.fine_positions) {
        RngStream r = rng.substream(k++);
        warp(p, r);
      }
      RngStream r = rng.substream(k);
      warp(out.context_positions, r);
      return out;
    }
    case AugmentKind::kTHalf:
      for (auto& p : out.fine_positions) t_half(p);
      t_half(out.context_positions);
      return out;
    case AugmentKind::kAllReverse:
      for (auto& p : out.fine_positions) std::reverse(p.begin(), p.end());
      std::reverse(out.context_positions.begin(), out.context_positions.end());
      return out;
  }
  throw std::invalid_argument("apply_strategy: unknown kind");
}

std::pair<ElementPlan, ElementBatch> apply_strategy(AugmentKind kind, const ElementPlan& plan,
                                                    const ElementBatch& batch, RngStream rng) {
  if (kind == AugmentKind::kSpatialOnly) {
    // Temporal identity; a stronger feature-space perturbation instead
    // (5x the default weak jitter, wider scale range).
    WeakAugConfig strong_spatial;
    strong_spatial.jitter_sigma = 0.1;
    strong_spatial.scale_lo = 0.5;
    strong_spatial.scale_hi = 1.5;
    return {plan, weak_augment(batch, strong_spatial, rng.substream(1))};
  }
  ElementPlan new_plan = apply_strategy_plan(kind, plan, rng.substream(0));
  ElementBatch out;
  out.fine.reserve(batch.fine.size());
  for (std::size_t e = 0; e < batch.fine.size(); ++e) {
    out.fine.push_back(
        regather(batch.fine[e], plan.fine_positions[e], new_plan.fine_positions[e]));
  }
  out.context = regather(batch.context, plan.context_positions, new_plan.context_positions);
  return {std::move(new_plan), std::move(out)};
}

}  // namespace sefar
