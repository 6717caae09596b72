#pragma once

#include <string>

#include "sefar/elements.hpp"
#include "sefar/rng.hpp"

namespace sefar {

/// Strong-augmentation catalog. ModPerturb is the default strategy; the
/// rest are the comparison strategies (plus Weak, which has its own op).
enum class AugmentKind {
  kWeak,
  kModPerturb,
  kSpatialOnly,
  kSlowTDrop,
  kAllShuffle,
  kLocalShuffle,
  kWarping,
  kTHalf,
  kAllReverse,
};

AugmentKind augment_kind_from_string(const std::string& name);
std::string to_string(AugmentKind kind);

/// All strategies except Weak, in catalog order.
const std::vector<AugmentKind>& strong_augment_kinds();

struct WeakAugConfig {
  double jitter_sigma = 0.02;
  double scale_lo = 0.9;
  double scale_hi = 1.1;
};

void validate(const WeakAugConfig& cfg);

/// Per-sample global scale drawn from [scale_lo, scale_hi] plus i.i.d.
/// Gaussian jitter. Frame order is untouched in every element.
ElementBatch weak_augment(const ElementBatch& batch, const WeakAugConfig& cfg, RngStream rng);

/// Reverses every fine element's position list; context element and
/// representative indices stay untouched. Involution.
ElementPlan strong_augment_mod_perturb(const ElementPlan& plan);

/// Applies one strategy to a plan and the element tensors materialized from
/// it (all batch rows must share the plan). Position-level strategies
/// rearrange the tensors by block so no access to the source video is
/// needed.
std::pair<ElementPlan, ElementBatch> apply_strategy(AugmentKind kind, const ElementPlan& plan,
                                                    const ElementBatch& batch, RngStream rng);

/// Plan-only part of apply_strategy (SpatialOnly returns the plan as-is).
ElementPlan apply_strategy_plan(AugmentKind kind, const ElementPlan& plan, RngStream rng);

}  // namespace sefar
