#pragma once

#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "sefar/augment.hpp"
#include "sefar/elements.hpp"
#include "sefar/model.hpp"
#include "sefar/ssl.hpp"
#include "sefar/synth_data.hpp"

namespace sefar {

/// Everything one run needs. Loaded from a single versioned JSON document;
/// unknown keys are rejected.
struct RunConfig {
  DatasetSpec dataset;
  SplitSpec split;
  ElementConfig elements;
  ModelConfig model;
  TrainConfig train;
  WeakAugConfig weak_augment;
  // Explicit strong-augmentation override; absent = ModPerturb/Warping per
  // the mod_perturb switch.
  std::optional<AugmentKind> strong_augment;
  std::uint64_t seed = 42;
  std::string out_dir = "runs/default";
};

constexpr int kConfigVersion = 1;

RunConfig default_run_config();

/// Cross-field validation (class counts, element bounds, etc.).
void validate(const RunConfig& cfg);

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);

RunConfig load_run_config(const std::string& path);

/// FNV-1a 64 over the canonical config serialization (out_dir excluded);
/// stored in every artifact.
std::string config_hash(const RunConfig& cfg);

/// Adds `offset` to the dataset, split and run seeds (multi-seed cells).
RunConfig with_seed_offset(const RunConfig& cfg, std::uint64_t offset);

}  // namespace sefar
