#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pfr/dataset.hpp"
#include "pfr/metrics.hpp"
#include "pfr/model.hpp"

namespace pfr {

// How a sensitive attribute with more than two classes enters the removal
// loop: binarized privileged-vs-rest, or k per-class predictors stopping on
// the maximum one-vs-all AUC.
enum class MulticlassMode { privileged_vs_rest, one_vs_all };

struct PfrConfig {
  std::vector<std::string> sensitive_order;
  std::map<std::string, double> tau_overrides;  // values in (0.5, 1]
  double auc_slack = 0.01;   // recheck tolerance only; the loop guard is strict
  int max_removals = -1;     // -1: d - 1 (never remove the last column)
  TrainConfig train_config;
  bool oversample = true;
  bool warm_start = true;
  double holdout_fraction = 0.0;  // 0: loop AUC is in-sample (default)
  MulticlassMode multiclass_mode = MulticlassMode::privileged_vs_rest;
  std::uint64_t seed = 0;
};

struct RemovalStep {
  std::string sensitive_column;
  int iteration = 0;  // 1-based, strictly increasing per attribute
  EncodedColumn removed_column;
  double auc_before = 0.0;
  double auc_after = 0.0;
  double weight_of_removed = 0.0;
};

// Ordered, replayable log of one attribute's removal loop.
struct RemovalTrace {
  std::string sensitive_column;
  double tau = 0.0;
  std::vector<RemovalStep> steps;
  std::vector<EncodedColumn> initial_columns;
  std::vector<EncodedColumn> final_columns;
  double final_auc = 0.0;
  bool truncated = false;  // hit the removal cap before the guard released

  std::vector<std::string> removed_ids() const;
};

// Removal loop ran out of columns (or hit the cap) before AUC fell to tau.
// Carries the partial trace for diagnostics. CLI exit code 3.
class ExhaustedFeaturesError : public Error {
public:
  ExhaustedFeaturesError(const std::string& what, RemovalTrace partial_trace)
      : Error(what), partial(std::move(partial_trace)) {}
  RemovalTrace partial;
};

struct PfrResult {
  EncodedMatrix matrix;
  RemovalTrace trace;
};

// The core greedy loop for one binary sensitive vector: train a sensitive
// predictor, and while its AUC exceeds tau remove the most important feature
// and retrain. Requires a min-max-scaled matrix.
PfrResult pfr_run(const EncodedMatrix& m, const std::vector<int>& sensitive_binary, double tau,
                  const PfrConfig& cfg);

struct MultiResult {
  EncodedMatrix matrix;
  std::vector<RemovalTrace> traces;
};

// Applies the loop sequentially per attribute in cfg.sensitive_order, feeding
// each residual matrix to the next attribute. Per-attribute tau comes from
// cfg.tau_overrides, else the class-imbalance default.
MultiResult pfr_multi(const EncodedMatrix& m, const std::vector<SensitiveColumn>& sensitive,
                      const PfrConfig& cfg);
MultiResult pfr_multi(const EncodedMatrix& m, const TabularDataset& dataset, const PfrConfig& cfg);

// Trains the target model on residual features only.
LogisticModel train_fair_model(const EncodedMatrix& residual, const std::vector<int>& target,
                               const TrainConfig& cfg);

// Retrains a fresh sensitive predictor per attribute on the residual matrix
// and reports its AUC. Audit evidence that the removal guarantee held.
std::map<std::string, double> recheck(const EncodedMatrix& residual,
                                      const std::vector<SensitiveColumn>& sensitive,
                                      const PfrConfig& cfg);

// The default tau for one attribute under the configured multiclass mode.
double default_tau_for(const SensitiveColumn& column, MulticlassMode mode);

// JSON-lines serialization: one record per step.
std::string trace_to_jsonl(const RemovalTrace& trace);
std::vector<RemovalTrace> traces_from_jsonl(const std::string& text);

}  // namespace pfr
