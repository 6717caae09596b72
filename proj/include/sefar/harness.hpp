#pragma once

#include <string>
#include <vector>

#include "sefar/config.hpp"
#include "sefar/dataset_io.hpp"
#include "sefar/metrics.hpp"
#include "sefar/ssl.hpp"

namespace sefar {

struct RunResult {
  std::vector<EpochRecord> epochs;
  EvalReport final_eval;
  double teacher_seconds = 0.0;
  double total_seconds = 0.0;
  double teacher_time_share = 0.0;
  std::string hash;
};

struct RunOptions {
  std::string out_dir;         // empty = keep everything in memory
  std::string dataset_path;    // explicit dataset file; else <out>/dataset.sfds if present
  bool dump_teacher_stats = false;
};

/// Generates (or loads) the data, trains for the configured epochs and
/// writes metrics.jsonl, mid/final checkpoints and run_record.json when an
/// output directory is given. Refuses to overwrite a directory trained
/// under a different config hash.
RunResult run_training(const RunConfig& cfg, const RunOptions& options = {});

/// In-memory dataset + split for a config.
TrainData prepare_train_data(const RunConfig& cfg);

/// Writes dataset.sfds and manifest.csv under out_dir.
void cmd_gen_data(const RunConfig& cfg, const std::string& out_dir);

/// Rebuilds model and data from the checkpoint sidecar, evaluates on the
/// test split, writes eval_report.json and confusion.csv when out_dir is
/// nonempty.
EvalReport cmd_evaluate(const std::string& checkpoint_path, const std::string& out_dir);

enum class AblateGrid { kComponents, kStrategies };

AblateGrid ablate_grid_from_string(const std::string& name);

struct CellResult {
  std::string cell;
  std::uint64_t seed = 0;
  double top1 = 0.0;
  bool ok = false;
  std::string error;
};

/// Tab-style grids: "components" runs the four switch rows
/// (baseline -> +dual -> +mod_perturb -> +ada_reg); "strategies" runs every
/// strong augmentation. Failures are recorded per cell and the grid
/// continues. Writes ablate_cells.csv and ablate_summary.csv.
std::vector<CellResult> run_ablation(const RunConfig& base, AblateGrid grid, int num_seeds,
                                     const std::string& out_dir);

/// The four component rows, in ablation order.
RunConfig component_row_config(const RunConfig& base, int row);
std::string component_row_name(int row);
constexpr int kComponentRowCount = 4;

enum class SweepKind { kLabelRate, kTeacherPasses, kThreshold };

SweepKind sweep_kind_from_string(const std::string& name);

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  double top1 = 0.0;
  double teacher_time_share = 0.0;
  bool ok = false;
  std::string error;
};

/// label_rate: values are labeling ratios. teacher_passes: values are U.
/// threshold: values are fixed tau with ada_reg off, plus one
/// "adaptive" cell appended automatically. Writes sweep.csv.
std::vector<SweepRow> run_sweep(const RunConfig& base, SweepKind kind,
                                const std::vector<std::string>& values, int num_seeds,
                                const std::string& out_dir);

std::vector<std::string> default_sweep_values(SweepKind kind);

struct ProbeResult {
  TeacherFluctuationReport report;
  std::vector<TeacherStatsRow> rows;
  std::vector<int> true_labels;
};

/// Multi-pass prediction statistics of the checkpointed parameters over
/// randomly drawn unlabeled samples. Writes probe_report.json and
/// probe_stats.csv when out_dir is nonempty.
ProbeResult teacher_probe(const std::string& checkpoint_path, int sample_count,
                          const std::string& out_dir, const std::string& dataset_path = "");

/// ElementPlan debug dump for the `inspect` command.
std::string inspect_plan_json(const RunConfig& cfg, std::uint64_t sample_index);

nlohmann::json eval_report_to_json(const EvalReport& report);
nlohmann::json fluctuation_report_to_json(const TeacherFluctuationReport& report);

}  // namespace sefar
