#include "sefar/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sefar {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (known.count(it.key()) == 0) {
      throw std::invalid_argument("config: unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

void validate(const RunConfig& cfg) {
  validate(cfg.dataset);
  validate(cfg.split);
  validate(cfg.elements);
  validate(cfg.model);
  validate(cfg.train);
  validate(cfg.weak_augment);
  if (cfg.model.num_classes != cfg.dataset.num_classes) {
    throw std::invalid_argument("config: model.num_classes must equal dataset.num_classes");
  }
  if (cfg.elements.representative_frames > cfg.dataset.frames_per_sample) {
    throw std::invalid_argument(
        "config: elements.representative_frames exceeds dataset.frames_per_sample");
  }
  if (cfg.strong_augment && *cfg.strong_augment == AugmentKind::kWeak) {
    throw std::invalid_argument("config: strong_augment cannot be \"weak\"");
  }
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: root must be an object");
  reject_unknown_keys(j,
                      {"version", "seed", "out_dir", "dataset", "split", "elements", "model",
                       "train", "weak_augment", "strong_augment"},
                      "root");
  if (!j.contains("version")) throw std::invalid_argument("config: missing \"version\"");
  if (j.at("version").get<int>() != kConfigVersion) {
    throw std::invalid_argument("config: unsupported version " + j.at("version").dump());
  }

  RunConfig cfg;
  read_field(j, "seed", cfg.seed);
  read_field(j, "out_dir", cfg.out_dir);

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    reject_unknown_keys(d,
                        {"classes", "frames", "feature_dim", "samples_per_class", "noise_sigma",
                         "reversed_pairs", "seed"},
                        "dataset");
    read_field(d, "classes", cfg.dataset.num_classes);
    read_field(d, "frames", cfg.dataset.frames_per_sample);
    read_field(d, "feature_dim", cfg.dataset.feature_dim);
    read_field(d, "samples_per_class", cfg.dataset.samples_per_class);
    read_field(d, "noise_sigma", cfg.dataset.noise_sigma);
    read_field(d, "reversed_pairs", cfg.dataset.reversed_pair_count);
    read_field(d, "seed", cfg.dataset.seed);
    // Keep the model head consistent unless "model" overrides it below.
    cfg.model.num_classes = cfg.dataset.num_classes;
  }
  if (j.contains("split")) {
    const json& s = j.at("split");
    reject_unknown_keys(s, {"label_ratio", "test_fraction", "seed"}, "split");
    read_field(s, "label_ratio", cfg.split.label_ratio);
    read_field(s, "test_fraction", cfg.split.test_fraction);
    read_field(s, "seed", cfg.split.seed);
  }
  if (j.contains("elements")) {
    const json& e = j.at("elements");
    reject_unknown_keys(e, {"representative_frames", "fine_lengths", "context_length"},
                        "elements");
    read_field(e, "representative_frames", cfg.elements.representative_frames);
    read_field(e, "fine_lengths", cfg.elements.fine_lengths);
    read_field(e, "context_length", cfg.elements.context_length);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown_keys(
        m, {"feature_dim", "hidden_dim", "dropout", "classes", "fine_fusion", "include_fused_feature"},
        "model");
    read_field(m, "feature_dim", cfg.model.feature_dim);
    read_field(m, "hidden_dim", cfg.model.hidden_dim);
    read_field(m, "dropout", cfg.model.dropout_rate);
    read_field(m, "classes", cfg.model.num_classes);
    if (m.contains("fine_fusion")) {
      cfg.model.fusion.fine_fusion = fine_fusion_from_string(m.at("fine_fusion").get<std::string>());
    }
    read_field(m, "include_fused_feature", cfg.model.fusion.include_fused_feature);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown_keys(t,
                        {"lr", "momentum", "weight_decay", "ema_omega", "confidence_threshold",
                         "teacher_passes", "beta", "epsilon", "mix", "epochs", "labeled_batch",
                         "unlabeled_batch", "baseline_mode", "gamma1", "gamma2",
                         "uncertainty_mode", "dual_elements", "mod_perturb", "ada_reg", "gate",
                         "eta_batch_scalar", "use_unlabeled"},
                        "train");
    read_field(t, "lr", cfg.train.lr);
    read_field(t, "momentum", cfg.train.momentum);
    read_field(t, "weight_decay", cfg.train.weight_decay);
    read_field(t, "ema_omega", cfg.train.ema_omega);
    read_field(t, "confidence_threshold", cfg.train.confidence_threshold);
    read_field(t, "teacher_passes", cfg.train.teacher_passes);
    read_field(t, "beta", cfg.train.beta);
    read_field(t, "epsilon", cfg.train.epsilon);
    read_field(t, "mix", cfg.train.mix);
    read_field(t, "epochs", cfg.train.epochs);
    read_field(t, "labeled_batch", cfg.train.labeled_batch);
    read_field(t, "unlabeled_batch", cfg.train.unlabeled_batch);
    read_field(t, "baseline_mode", cfg.train.baseline_mode);
    read_field(t, "gamma1", cfg.train.gamma1);
    read_field(t, "gamma2", cfg.train.gamma2);
    if (t.contains("uncertainty_mode")) {
      cfg.train.uncertainty_mode =
          uncertainty_mode_from_string(t.at("uncertainty_mode").get<std::string>());
    }
    read_field(t, "dual_elements", cfg.train.dual_elements);
    read_field(t, "mod_perturb", cfg.train.mod_perturb);
    read_field(t, "ada_reg", cfg.train.ada_reg);
    read_field(t, "gate", cfg.train.gate);
    read_field(t, "eta_batch_scalar", cfg.train.eta_batch_scalar);
    read_field(t, "use_unlabeled", cfg.train.use_unlabeled);
  }
  if (j.contains("weak_augment")) {
    const json& w = j.at("weak_augment");
    reject_unknown_keys(w, {"jitter_sigma", "scale_lo", "scale_hi"}, "weak_augment");
    read_field(w, "jitter_sigma", cfg.weak_augment.jitter_sigma);
    read_field(w, "scale_lo", cfg.weak_augment.scale_lo);
    read_field(w, "scale_hi", cfg.weak_augment.scale_hi);
  }
  if (j.contains("strong_augment") && !j.at("strong_augment").is_null()) {
    cfg.strong_augment = augment_kind_from_string(j.at("strong_augment").get<std::string>());
  }

  validate(cfg);
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["version"] = kConfigVersion;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["dataset"] = {{"classes", cfg.dataset.num_classes},
                  {"frames", cfg.dataset.frames_per_sample},
                  {"feature_dim", cfg.dataset.feature_dim},
                  {"samples_per_class", cfg.dataset.samples_per_class},
                  {"noise_sigma", cfg.dataset.noise_sigma},
                  {"reversed_pairs", cfg.dataset.reversed_pair_count},
                  {"seed", cfg.dataset.seed}};
  j["split"] = {{"label_ratio", cfg.split.label_ratio},
                {"test_fraction", cfg.split.test_fraction},
                {"seed", cfg.split.seed}};
  j["elements"] = {{"representative_frames", cfg.elements.representative_frames},
                   {"fine_lengths", cfg.elements.fine_lengths},
                   {"context_length", cfg.elements.context_length}};
  j["model"] = {{"feature_dim", cfg.model.feature_dim},
                {"hidden_dim", cfg.model.hidden_dim},
                {"dropout", cfg.model.dropout_rate},
                {"classes", cfg.model.num_classes},
                {"fine_fusion", to_string(cfg.model.fusion.fine_fusion)},
                {"include_fused_feature", cfg.model.fusion.include_fused_feature}};
  j["train"] = {{"lr", cfg.train.lr},
                {"momentum", cfg.train.momentum},
                {"weight_decay", cfg.train.weight_decay},
                {"ema_omega", cfg.train.ema_omega},
                {"confidence_threshold", cfg.train.confidence_threshold},
                {"teacher_passes", cfg.train.teacher_passes},
                {"beta", cfg.train.beta},
                {"epsilon", cfg.train.epsilon},
                {"mix", cfg.train.mix},
                {"epochs", cfg.train.epochs},
                {"labeled_batch", cfg.train.labeled_batch},
                {"unlabeled_batch", cfg.train.unlabeled_batch},
                {"baseline_mode", cfg.train.baseline_mode},
                {"gamma1", cfg.train.gamma1},
                {"gamma2", cfg.train.gamma2},
                {"uncertainty_mode", to_string(cfg.train.uncertainty_mode)},
                {"dual_elements", cfg.train.dual_elements},
                {"mod_perturb", cfg.train.mod_perturb},
                {"ada_reg", cfg.train.ada_reg},
                {"gate", cfg.train.gate},
                {"eta_batch_scalar", cfg.train.eta_batch_scalar},
                {"use_unlabeled", cfg.train.use_unlabeled}};
  j["weak_augment"] = {{"jitter_sigma", cfg.weak_augment.jitter_sigma},
                       {"scale_lo", cfg.weak_augment.scale_lo},
                       {"scale_hi", cfg.weak_augment.scale_hi}};
  if (cfg.strong_augment) {
    j["strong_augment"] = to_string(*cfg.strong_augment);
  } else {
    j["strong_augment"] = nullptr;
  }
  return j;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: parse error in " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::string config_hash(const RunConfig& cfg) {
  json j = run_config_to_json(cfg);
  j.erase("out_dir");
  const std::string canonical = j.dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

RunConfig with_seed_offset(const RunConfig& cfg, std::uint64_t offset) {
  RunConfig out = cfg;
  out.seed += offset;
  out.dataset.seed += offset;
  out.split.seed += offset;
  return out;
}

}  // namespace sefar
