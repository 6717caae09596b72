#include "sefar/harness.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sefar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw std::runtime_error("write failed for " + path);
}

json epoch_record_to_json(const EpochRecord& rec) {
  return json{{"epoch", rec.epoch},   {"l_sup", rec.l_sup},       {"l_un", rec.l_un},
              {"l_mix", rec.l_mix},   {"xi", rec.xi},             {"mean_eta", rec.mean_eta},
              {"gate_rate", rec.gate_rate}, {"top1", rec.top1}};
}

void verify_dataset_matches(const StoredDataset& stored, const RunConfig& cfg) {
  const bool spec_ok = stored.spec.num_classes == cfg.dataset.num_classes &&
                       stored.spec.frames_per_sample == cfg.dataset.frames_per_sample &&
                       stored.spec.feature_dim == cfg.dataset.feature_dim &&
                       stored.spec.samples_per_class == cfg.dataset.samples_per_class &&
                       stored.spec.noise_sigma == cfg.dataset.noise_sigma &&
                       stored.spec.reversed_pair_count == cfg.dataset.reversed_pair_count &&
                       stored.spec.seed == cfg.dataset.seed;
  const bool split_ok = stored.split.label_ratio == cfg.split.label_ratio &&
                        stored.split.test_fraction == cfg.split.test_fraction &&
                        stored.split.seed == cfg.split.seed;
  if (!spec_ok || !split_ok) {
    throw std::invalid_argument("dataset file does not match the configured dataset/split");
  }
}

void save_checkpoint(const std::string& stem, const Trainer& trainer, const RunConfig& cfg) {
  save_params(trainer.student(), stem + ".sfar");
  save_params(trainer.teacher(), stem + ".teacher.sfar");
  json sidecar;
  sidecar["config_hash"] = config_hash(cfg);
  sidecar["config"] = run_config_to_json(cfg);
  write_text_file(stem + ".json", sidecar.dump(2) + "\n");
}

struct CheckpointBundle {
  RunConfig cfg;
  ParamSet params;
};

CheckpointBundle load_checkpoint(const std::string& checkpoint_path) {
  fs::path p(checkpoint_path);
  // checkpoint_final.teacher.sfar shares checkpoint_final.json.
  std::string stem = p.stem().string();
  if (stem.size() > 8 && stem.substr(stem.size() - 8) == ".teacher") {
    stem = stem.substr(0, stem.size() - 8);
  }
  const fs::path sidecar_path = p.parent_path() / (stem + ".json");
  std::ifstream is(sidecar_path);
  if (!is) {
    throw std::runtime_error("checkpoint sidecar not found: " + sidecar_path.string());
  }
  json sidecar;
  is >> sidecar;
  CheckpointBundle bundle{run_config_from_json(sidecar.at("config")),
                          load_params(checkpoint_path)};
  if (sidecar.at("config_hash").get<std::string>() != config_hash(bundle.cfg)) {
    throw std::runtime_error("checkpoint sidecar hash does not match its config");
  }
  return bundle;
}

SefarModel build_model(const RunConfig& cfg) {
  ModelConfig model_cfg = cfg.model;
  model_cfg.num_classes = cfg.dataset.num_classes;
  return SefarModel(model_cfg, effective_element_config(cfg.elements, cfg.train.dual_elements),
                    cfg.dataset.feature_dim);
}

}  // namespace

TrainData prepare_train_data(const RunConfig& cfg) {
  const Dataset data = generate_dataset(cfg.dataset);
  const SplitResult split = split_by_ratio(data, cfg.split);
  return to_train_data(make_stored_dataset(data, split, cfg.split));
}

RunResult run_training(const RunConfig& cfg, const RunOptions& options) {
  validate(cfg);
  const std::string hash = config_hash(cfg);

  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    const fs::path record_path = fs::path(options.out_dir) / "run_record.json";
    if (fs::exists(record_path)) {
      std::ifstream is(record_path);
      json existing;
      is >> existing;
      if (existing.value("config_hash", "") != hash) {
        throw std::invalid_argument("output directory " + options.out_dir +
                                    " holds a run with a different config hash; refusing to mix");
      }
    }
  }

  TrainData data;
  std::string dataset_path = options.dataset_path;
  if (dataset_path.empty() && !options.out_dir.empty()) {
    const fs::path candidate = fs::path(options.out_dir) / "dataset.sfds";
    if (fs::exists(candidate)) dataset_path = candidate.string();
  }
  if (!dataset_path.empty()) {
    StoredDataset stored = load_dataset(dataset_path);
    verify_dataset_matches(stored, cfg);
    data = to_train_data(stored);
  } else {
    data = prepare_train_data(cfg);
  }

  Trainer trainer(cfg.elements, cfg.model, cfg.train, cfg.weak_augment,
                  effective_strong_kind(cfg.train.mod_perturb, cfg.strong_augment),
                  std::move(data), cfg.seed);

  RunResult result;
  result.hash = hash;
  std::vector<TeacherStatsRow> teacher_rows;
  std::ostringstream metrics_stream;
  const int mid_epoch = (cfg.train.epochs + 1) / 2 - 1;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    EpochRecord rec =
        trainer.train_epoch(epoch, options.dump_teacher_stats ? &teacher_rows : nullptr);
    metrics_stream << epoch_record_to_json(rec).dump() << '\n';
    result.epochs.push_back(rec);
    if (!options.out_dir.empty() && epoch == mid_epoch) {
      save_checkpoint((fs::path(options.out_dir) / "checkpoint_mid").string(), trainer, cfg);
    }
  }

  result.final_eval = evaluate(trainer.predict_test_labels(), trainer.test_true_labels(),
                               cfg.dataset.num_classes);

  result.teacher_seconds = trainer.teacher_seconds();
  result.total_seconds = trainer.total_seconds();
  result.teacher_time_share =
      result.total_seconds > 0.0 ? result.teacher_seconds / result.total_seconds : 0.0;

  if (!options.out_dir.empty()) {
    write_text_file((fs::path(options.out_dir) / "metrics.jsonl").string(), metrics_stream.str());
    save_checkpoint((fs::path(options.out_dir) / "checkpoint_final").string(), trainer, cfg);
    if (options.dump_teacher_stats) {
      std::ostringstream ts;
      for (const auto& row : teacher_rows) {
        ts << json{{"epoch", row.epoch},
                   {"step", row.step},
                   {"sample", row.sample_index},
                   {"mu_star", row.mu_star},
                   {"sigma_star", row.sigma_star},
                   {"eta", row.eta},
                   {"confidence", row.confidence},
                   {"pseudo_label", row.pseudo_label},
                   {"gated_in", row.gated_in}}
                  .dump()
           << '\n';
      }
      write_text_file((fs::path(options.out_dir) / "teacher_stats.jsonl").string(), ts.str());
    }
    json record;
    record["config_hash"] = hash;
    record["config"] = run_config_to_json(cfg);
    json epochs = json::array();
    for (const auto& rec : result.epochs) epochs.push_back(epoch_record_to_json(rec));
    record["epochs"] = std::move(epochs);
    record["final_eval"] = eval_report_to_json(result.final_eval);
    record["timings"] = {{"teacher_seconds", result.teacher_seconds},
                         {"total_seconds", result.total_seconds},
                         {"teacher_time_share", result.teacher_time_share}};
    write_text_file((fs::path(options.out_dir) / "run_record.json").string(),
                    record.dump(2) + "\n");
  }
  return result;
}

void cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
  validate(cfg);
  fs::create_directories(out_dir);
  const Dataset data = generate_dataset(cfg.dataset);
  const SplitResult split = split_by_ratio(data, cfg.split);
  const StoredDataset stored = make_stored_dataset(data, split, cfg.split);
  save_dataset(stored, (fs::path(out_dir) / "dataset.sfds").string());
  write_manifest_csv(stored, (fs::path(out_dir) / "manifest.csv").string());
}

json eval_report_to_json(const EvalReport& report) {
  return json{{"top1", report.top1},
              {"per_class_accuracy", report.per_class_accuracy},
              {"confusion", report.confusion},
              {"sample_count", report.sample_count}};
}

json fluctuation_report_to_json(const TeacherFluctuationReport& report) {
  json bins = json::array();
  for (const auto& b : report.confidence_bins) {
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"count", b.count},
                    {"correct", b.correct},
                    {"accuracy", b.count > 0 ? json(static_cast<double>(b.correct) / b.count)
                                             : json(nullptr)}});
  }
  return json{{"sample_count", report.sample_count},
              {"mean_sigma_correct",
               report.mean_sigma_correct ? json(*report.mean_sigma_correct) : json(nullptr)},
              {"mean_sigma_wrong",
               report.mean_sigma_wrong ? json(*report.mean_sigma_wrong) : json(nullptr)},
              {"confidence_bins", std::move(bins)}};
}

EvalReport cmd_evaluate(const std::string& checkpoint_path, const std::string& out_dir) {
  CheckpointBundle bundle = load_checkpoint(checkpoint_path);
  const SefarModel model = build_model(bundle.cfg);
  const TrainData data = prepare_train_data(bundle.cfg);
  const ElementConfig effective =
      effective_element_config(bundle.cfg.elements, bundle.cfg.train.dual_elements);
  const auto preds =
      predict_labels_multiview(model, bundle.params, data.test, effective, bundle.cfg.seed);
  std::vector<int> truth;
  for (const auto& v : data.test) truth.push_back(v.eval_true_label());
  const EvalReport report = evaluate(preds, truth, bundle.cfg.dataset.num_classes);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "eval_report.json").string(),
                    eval_report_to_json(report).dump(2) + "\n");
    std::ostringstream csv;
    for (const auto& row : report.confusion) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        csv << row[j] << (j + 1 < row.size() ? ',' : '\n');
      }
    }
    write_text_file((fs::path(out_dir) / "confusion.csv").string(), csv.str());
  }
  return report;
}

AblateGrid ablate_grid_from_string(const std::string& name) {
  if (name == "components") return AblateGrid::kComponents;
  if (name == "strategies") return AblateGrid::kStrategies;
  throw std::invalid_argument("unknown ablation grid: " + name);
}

std::string component_row_name(int row) {
  switch (row) {
    case 0: return "baseline";
    case 1: return "dual";
    case 2: return "dual+mod_perturb";
    case 3: return "dual+mod_perturb+ada_reg";
  }
  throw std::invalid_argument("component row out of range");
}

RunConfig component_row_config(const RunConfig& base, int row) {
  RunConfig cfg = base;
  cfg.strong_augment.reset();
  cfg.train.baseline_mode = row == 0;
  cfg.train.dual_elements = row >= 1;
  cfg.train.mod_perturb = row >= 2;
  cfg.train.ada_reg = row >= 3;
  return cfg;
}

namespace {

void write_cells_csv(const std::vector<CellResult>& cells, const std::string& out_dir) {
  std::ostringstream csv;
  csv << "cell,seed,top1,status\n";
  for (const auto& c : cells) {
    csv << c.cell << ',' << c.seed << ',';
    if (c.ok) {
      csv << c.top1 << ",ok\n";
    } else {
      csv << ",error: " << c.error << '\n';
    }
  }
  write_text_file((fs::path(out_dir) / "ablate_cells.csv").string(), csv.str());

  std::ostringstream summary;
  summary << "cell,mean_top1,seeds\n";
  std::vector<std::string> order;
  for (const auto& c : cells) {
    if (std::find(order.begin(), order.end(), c.cell) == order.end()) order.push_back(c.cell);
  }
  for (const auto& name : order) {
    double sum = 0.0;
    int n = 0;
    for (const auto& c : cells) {
      if (c.cell == name && c.ok) {
        sum += c.top1;
        ++n;
      }
    }
    summary << name << ',' << (n > 0 ? sum / n : 0.0) << ',' << n << '\n';
  }
  write_text_file((fs::path(out_dir) / "ablate_summary.csv").string(), summary.str());
}

}  // namespace

std::vector<CellResult> run_ablation(const RunConfig& base, AblateGrid grid, int num_seeds,
                                     const std::string& out_dir) {
  if (num_seeds < 1) throw std::invalid_argument("run_ablation: num_seeds must be >= 1");
  if (!out_dir.empty()) fs::create_directories(out_dir);

  struct Cell {
    std::string name;
    RunConfig cfg;
  };
  std::vector<Cell> grid_cells;
  if (grid == AblateGrid::kComponents) {
    for (int row = 0; row < kComponentRowCount; ++row) {
      grid_cells.push_back({component_row_name(row), component_row_config(base, row)});
    }
  } else {
    for (AugmentKind kind : strong_augment_kinds()) {
      RunConfig cfg = base;
      cfg.train.dual_elements = true;
      cfg.train.ada_reg = true;
      cfg.train.baseline_mode = false;
      cfg.strong_augment = kind;
      grid_cells.push_back({to_string(kind), cfg});
    }
  }

  std::vector<CellResult> results;
  for (const Cell& cell : grid_cells) {
    for (int s = 0; s < num_seeds; ++s) {
      const RunConfig cfg = with_seed_offset(cell.cfg, static_cast<std::uint64_t>(s));
      CellResult r;
      r.cell = cell.name;
      r.seed = cfg.seed;
      try {
        r.top1 = run_training(cfg).final_eval.top1;
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      results.push_back(std::move(r));
    }
  }
  if (!out_dir.empty()) write_cells_csv(results, out_dir);
  return results;
}

SweepKind sweep_kind_from_string(const std::string& name) {
  if (name == "label_rate") return SweepKind::kLabelRate;
  if (name == "teacher_passes") return SweepKind::kTeacherPasses;
  if (name == "threshold") return SweepKind::kThreshold;
  throw std::invalid_argument("unknown sweep kind: " + name);
}

std::vector<std::string> default_sweep_values(SweepKind kind) {
  switch (kind) {
    case SweepKind::kLabelRate: return {"0.01", "0.03", "0.05", "0.07", "0.10"};
    case SweepKind::kTeacherPasses: return {"1", "2", "5", "10", "15", "20"};
    case SweepKind::kThreshold: return {"0.3", "0.5", "0.7", "0.9"};
  }
  throw std::invalid_argument("unknown sweep kind");
}

std::vector<SweepRow> run_sweep(const RunConfig& base, SweepKind kind,
                                const std::vector<std::string>& values, int num_seeds,
                                const std::string& out_dir) {
  if (num_seeds < 1) throw std::invalid_argument("run_sweep: num_seeds must be >= 1");
  if (!out_dir.empty()) fs::create_directories(out_dir);

  struct Cell {
    std::string value;
    RunConfig cfg;
  };
  std::vector<Cell> cells;
  for (const std::string& value : values) {
    RunConfig cfg = base;
    switch (kind) {
      case SweepKind::kLabelRate:
        cfg.split.label_ratio = std::stod(value);
        break;
      case SweepKind::kTeacherPasses:
        cfg.train.teacher_passes = std::stoi(value);
        break;
      case SweepKind::kThreshold:
        cfg.train.ada_reg = false;
        cfg.train.confidence_threshold = std::stod(value);
        break;
    }
    cells.push_back({value, cfg});
  }
  if (kind == SweepKind::kThreshold) {
    RunConfig cfg = base;
    cfg.train.ada_reg = true;
    cells.push_back({"adaptive", cfg});
  }

  std::vector<SweepRow> rows;
  for (const Cell& cell : cells) {
    for (int s = 0; s < num_seeds; ++s) {
      const RunConfig cfg = with_seed_offset(cell.cfg, static_cast<std::uint64_t>(s));
      SweepRow row;
      row.value = cell.value;
      row.seed = cfg.seed;
      try {
        const RunResult result = run_training(cfg);
        row.top1 = result.final_eval.top1;
        row.teacher_time_share = result.teacher_time_share;
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }

  if (!out_dir.empty()) {
    std::ostringstream csv;
    csv << "value,seed,top1,teacher_time_share,status\n";
    for (const auto& row : rows) {
      csv << row.value << ',' << row.seed << ',';
      if (row.ok) {
        csv << row.top1 << ',' << row.teacher_time_share << ",ok\n";
      } else {
        csv << ",,error: " << row.error << '\n';
      }
    }
    write_text_file((fs::path(out_dir) / "sweep.csv").string(), csv.str());
  }
  return rows;
}

ProbeResult teacher_probe(const std::string& checkpoint_path, int sample_count,
                          const std::string& out_dir, const std::string& dataset_path) {
  if (sample_count < 1) throw std::invalid_argument("teacher_probe: sample_count must be >= 1");
  CheckpointBundle bundle = load_checkpoint(checkpoint_path);
  const RunConfig& cfg = bundle.cfg;
  const SefarModel model = build_model(cfg);
  TrainData data;
  if (!dataset_path.empty()) {
    StoredDataset stored = load_dataset(dataset_path);
    verify_dataset_matches(stored, cfg);
    data = to_train_data(stored);
  } else {
    data = prepare_train_data(cfg);
  }
  if (data.unlabeled.empty()) throw std::runtime_error("teacher_probe: no unlabeled samples");

  const auto order = shuffled_indices(data.unlabeled.size(),
                                      derive_stream(cfg.seed, streams::kProbe, 0));
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(sample_count),
                                              data.unlabeled.size());
  const ElementConfig effective =
      effective_element_config(cfg.elements, cfg.train.dual_elements);

  ProbeResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = order[i];
    const VideoSample& v = data.unlabeled[idx];
    const ElementPlan plan =
        build_elements(effective, static_cast<int>(v.frames.rows),
                       derive_stream(cfg.seed, streams::kProbe, 1, idx));
    const ElementBatch weak =
        weak_augment(materialize(v, plan), cfg.weak_augment,
                     derive_stream(cfg.seed, streams::kProbe, 2, idx));
    const Matrix passes =
        teacher_predict_multi(model, bundle.params, weak, cfg.train.teacher_passes,
                              derive_stream(cfg.seed, streams::kProbe, 3, idx));
    const Uncertainty unc = compute_uncertainty(passes, cfg.train.uncertainty_mode);
    const AdaptiveCoefficients coeffs =
        adaptive_coefficients(unc.mu_star, unc.sigma_star, cfg.train.beta, cfg.train.epsilon);
    TeacherStatsRow row;
    row.epoch = 0;
    row.step = 0;
    row.sample_index = idx;
    row.mu_star = unc.mu_star;
    row.sigma_star = unc.sigma_star;
    row.eta = coeffs.eta;
    const std::size_t best = static_cast<std::size_t>(
        std::max_element(unc.pseudo_probs.begin(), unc.pseudo_probs.end()) -
        unc.pseudo_probs.begin());
    row.pseudo_label = static_cast<int>(best);
    row.confidence = unc.pseudo_probs[best];
    row.gated_in = row.confidence > cfg.train.confidence_threshold;
    out.rows.push_back(row);
    out.true_labels.push_back(v.eval_true_label());
  }
  out.report = teacher_fluctuation(out.rows, out.true_labels);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "probe_report.json").string(),
                    fluctuation_report_to_json(out.report).dump(2) + "\n");
    std::ostringstream csv;
    csv << "sample,mu_star,sigma_star,eta,confidence,pseudo_label,true_label,gated_in,correct\n";
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
      const auto& r = out.rows[i];
      csv << r.sample_index << ',' << r.mu_star << ',' << r.sigma_star << ',' << r.eta << ','
          << r.confidence << ',' << r.pseudo_label << ',' << out.true_labels[i] << ','
          << (r.gated_in ? 1 : 0) << ',' << (r.pseudo_label == out.true_labels[i] ? 1 : 0)
          << '\n';
    }
    write_text_file((fs::path(out_dir) / "probe_stats.csv").string(), csv.str());
  }
  return out;
}

std::string inspect_plan_json(const RunConfig& cfg, std::uint64_t sample_index) {
  validate(cfg);
  const ElementConfig effective =
      effective_element_config(cfg.elements, cfg.train.dual_elements);
  const ElementPlan plan = build_elements(effective, cfg.dataset.frames_per_sample,
                                          train_streams::plan(cfg.seed, 0, sample_index, 0));
  json j;
  j["representative_indices"] = plan.representative_indices;
  j["fine_positions"] = plan.fine_positions;
  j["context_positions"] = plan.context_positions;
  j["mod_perturb"] = json{
      {"fine_positions", strong_augment_mod_perturb(plan).fine_positions},
      {"context_positions", plan.context_positions}};
  return j.dump(2) + "\n";
}

}  // namespace sefar
