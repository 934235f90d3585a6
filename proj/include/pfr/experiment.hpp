#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfr/dataset.hpp"
#include "pfr/metrics.hpp"
#include "pfr/model.hpp"
#include "pfr/pfr.hpp"

namespace pfr {

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<std::vector<std::string>> sensitive_sets;  // e.g. {race}, {sex}, {race, sex}
  std::vector<double> tau_grid;                          // values in (0.5, 1]
  double split_fraction = 0.8;
  std::uint64_t seed = 0;
  std::string output_dir;
  bool oversample = true;
  double auc_slack = 0.01;
  int max_removals = -1;
  double holdout_fraction = 0.0;
  MulticlassMode multiclass_mode = MulticlassMode::privileged_vs_rest;
  TrainConfig loop_train{.max_iterations = 150};
  TrainConfig model_train{.max_iterations = 1000};
  int workers = 0;  // 0: PFR_WORKERS env var, else hardware concurrency

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text, const std::string& base_dir);
};

struct SweepRow {
  std::string sensitive_set;  // names joined by '+'
  double tau = 0.0;
  bool baseline = false;
  double accuracy = 0.0;
  double di_binary = 0.0;
  double di_average = 0.0;
  int n_removed = 0;
  double final_auc_max = 0.0;
  long runtime_ms = 0;  // written to timings.csv, not sweep.csv (determinism)
  std::string error;
};

struct ExperimentResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> files_written;
};

// Runs the full tau sweep: for each (sensitive set, tau) grid point encode,
// scale, split, run the removal loop on the train part, fit the fair model,
// and score accuracy / disparate impact on the held-out part. Also emits one
// no-removal baseline row per sensitive set. Writes sweep.csv, per-point
// trace/report/rate files, and a timings.csv sidecar into cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct RateCurveRow {
  double threshold = 0.0;
  double rate_privileged = 0.0;
  double rate_unprivileged = 0.0;
};

// Positive-prediction rate per group for thresholds 0.00 to 1.00 step 0.01.
std::vector<RateCurveRow> positive_rate_curve(const LogisticModel& model, const EncodedMatrix& m,
                                              const SensitiveColumn& sensitive);

// Human-readable detected-features table, removed columns grouped by source
// attribute; numeric columns render as "continuous".
std::string emit_table_report(const std::vector<RemovalTrace>& traces);

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

}  // namespace pfr
