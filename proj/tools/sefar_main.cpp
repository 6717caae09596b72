// sefar: experiment runner for semi-supervised fine-grained sequence
// classification. See README.md for the config format and workflows.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "sefar/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string strategy;
  std::string mode;
  bool no_gate = false;
  bool dump_teacher_stats = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config path (defaults apply if omitted)");
  cmd->add_option("--out", args.out_dir, "output directory (overrides config out_dir)");
  cmd->add_option("--seed", args.seed, "run seed (overrides config seed)")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--strategy", args.strategy,
                  "strong augmentation override (mod_perturb, warping, all_shuffle, ...)");
  cmd->add_option("--mode", args.mode, "loss mode: sefar or baseline")
      ->check(CLI::IsMember({"sefar", "baseline"}));
  cmd->add_flag("--no-gate", args.no_gate, "disable the confidence gate (pure-eta weighting)");
  cmd->add_flag("--dump-teacher-stats", args.dump_teacher_stats,
                "write per-sample teacher statistics as JSONL");
}

sefar::RunConfig resolve_config(const CommonArgs& args) {
  sefar::RunConfig cfg = args.config_path.empty() ? sefar::default_run_config()
                                                  : sefar::load_run_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (!args.strategy.empty()) {
    cfg.strong_augment = sefar::augment_kind_from_string(args.strategy);
  }
  if (!args.mode.empty()) cfg.train.baseline_mode = args.mode == "baseline";
  if (args.no_gate) cfg.train.gate = false;
  sefar::validate(cfg);
  return cfg;
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SeFAR-style semi-supervised fine-grained sequence classification harness"};
  app.require_subcommand(1);

  CommonArgs args;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset and its manifest");
  add_common(gen, args);

  auto* train = app.add_subcommand("train", "train one run and write metrics + checkpoints");
  add_common(train, args);
  std::string data_path;
  train->add_option("--data", data_path, "dataset file (defaults to <out>/dataset.sfds)");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  std::string checkpoint_path;
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint (.sfar)")->required();
  evaluate->add_option("--out", args.out_dir, "output directory for the report");

  auto* ablate = app.add_subcommand("ablate", "run a component or strategy ablation grid");
  add_common(ablate, args);
  std::string grid = "components";
  int num_seeds = 3;
  ablate->add_option("--grid", grid, "components | strategies")
      ->check(CLI::IsMember({"components", "strategies"}));
  ablate->add_option("--seeds", num_seeds, "seeds per cell (default 3)");

  auto* sweep = app.add_subcommand("sweep", "sweep label rate, teacher passes or threshold");
  add_common(sweep, args);
  std::string sweep_kind;
  std::string sweep_values;
  sweep->add_option("--kind", sweep_kind, "label_rate | teacher_passes | threshold")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values (defaults per kind)");
  sweep->add_option("--seeds", num_seeds, "seeds per value (default 3)");

  auto* probe = app.add_subcommand("teacher-probe",
                                   "multi-pass teacher statistics for a checkpoint");
  probe->add_option("--checkpoint", checkpoint_path, "checkpoint (.sfar)")->required();
  int probe_samples = 30;
  probe->add_option("--samples", probe_samples, "unlabeled samples to draw (default 30)");
  probe->add_option("--data", data_path, "dataset file (regenerated from config if omitted)");
  probe->add_option("--out", args.out_dir, "output directory for report + CSV");

  auto* inspect = app.add_subcommand("inspect", "dump one sample's element plan as JSON");
  add_common(inspect, args);
  std::uint64_t inspect_sample = 0;
  inspect->add_option("--sample", inspect_sample, "sample index (default 0)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto cfg = resolve_config(args);
      sefar::cmd_gen_data(cfg, cfg.out_dir);
      std::cout << "dataset written to " << cfg.out_dir << "/dataset.sfds\n";
    } else if (train->parsed()) {
      const auto cfg = resolve_config(args);
      sefar::RunOptions options;
      options.out_dir = cfg.out_dir;
      options.dataset_path = data_path;
      options.dump_teacher_stats = args.dump_teacher_stats;
      const auto result = sefar::run_training(cfg, options);
      std::cout << "final top1 " << result.final_eval.top1 << " (hash " << result.hash
                << ", teacher share " << result.teacher_time_share << ")\n";
    } else if (evaluate->parsed()) {
      const auto report = sefar::cmd_evaluate(checkpoint_path, args.out_dir);
      std::cout << sefar::eval_report_to_json(report).dump(2) << '\n';
    } else if (ablate->parsed()) {
      const auto cfg = resolve_config(args);
      const auto cells = sefar::run_ablation(cfg, sefar::ablate_grid_from_string(grid), num_seeds,
                                             cfg.out_dir);
      for (const auto& c : cells) {
        std::cout << c.cell << " seed=" << c.seed << " "
                  << (c.ok ? "top1=" + std::to_string(c.top1) : "error: " + c.error) << '\n';
      }
    } else if (sweep->parsed()) {
      const auto cfg = resolve_config(args);
      const auto kind = sefar::sweep_kind_from_string(sweep_kind);
      const auto values =
          sweep_values.empty() ? sefar::default_sweep_values(kind) : split_csv(sweep_values);
      const auto rows = sefar::run_sweep(cfg, kind, values, num_seeds, cfg.out_dir);
      for (const auto& r : rows) {
        std::cout << r.value << " seed=" << r.seed << " "
                  << (r.ok ? "top1=" + std::to_string(r.top1) +
                                 " teacher_share=" + std::to_string(r.teacher_time_share)
                           : "error: " + r.error)
                  << '\n';
      }
    } else if (probe->parsed()) {
      const auto result = sefar::teacher_probe(checkpoint_path, probe_samples, args.out_dir,
                                               data_path);
      std::cout << sefar::fluctuation_report_to_json(result.report).dump(2) << '\n';
    } else if (inspect->parsed()) {
      const auto cfg = resolve_config(args);
      std::cout << sefar::inspect_plan_json(cfg, inspect_sample);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
