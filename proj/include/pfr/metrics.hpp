#pragma once

#include <string>
#include <vector>

#include "pfr/dataset.hpp"

namespace pfr {

// Probability that a uniformly random positive outscores a uniformly random
// negative, ties counted 1/2 (rank / Mann-Whitney formulation).
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);

// Per class c: auc_roc(scores_per_class[c], values == c). Every class in
// [0, n_classes) must be present.
std::vector<double> auc_one_vs_all(const std::vector<std::vector<double>>& scores_per_class,
                                   const std::vector<int>& values, int n_classes);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual);

// Pr(pred=1 | unprivileged) / Pr(pred=1 | privileged), every non-privileged
// class pooled. 0/0 is defined as 1.0; x/0 with x>0 signals +infinity.
double disparate_impact_binary(const std::vector<int>& predicted, const std::vector<int>& groups,
                               int privileged);

// Mean over all (unprivileged u, privileged p) pairs of rate(u) / rate(p).
double disparate_impact_average(const std::vector<int>& predicted, const std::vector<int>& groups,
                                const std::vector<int>& privileged_classes,
                                const std::vector<int>& unprivileged_classes);

// Majority-class proportion of a binary vector; the default AUC stopping
// threshold. Single-class input returns 1.0, which callers must treat as
// degenerate.
double tau_default(const std::vector<int>& values);

// Largest class proportion for a multi-class vector.
double tau_default_majority(const std::vector<int>& values, int n_classes);

struct FairnessReport {
  std::string sensitive_column;
  double tau = 0.0;
  double accuracy = 0.0;
  double disparate_impact_binary = 0.0;
  double disparate_impact_average = 0.0;
  std::vector<EncodedColumn> removed_columns;
  double final_sensitive_auc = 0.0;
};

std::string report_to_json(const FairnessReport& report);
std::string report_csv_header();
std::string report_csv_row(const FairnessReport& report);

// Fixed 6-decimal rendering shared by every CSV artifact; infinities render
// as "inf" so spreadsheets and diffs stay stable.
std::string format_metric(double v);

}  // namespace pfr
