#include "pfr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace pfr {

namespace {

// rate(u) / rate(p) with the two degenerate conventions: 0/0 is 1.0 (neither
// group receives positives, no disparity) and x/0 with x > 0 is +infinity.
double rate_ratio(double unprivileged, double privileged) {
  if (privileged == 0.0) {
    return unprivileged == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return unprivileged / privileged;
}

double positive_rate(const std::vector<int>& predicted, const std::vector<int>& groups,
                     const std::vector<int>& classes, const char* label) {
  std::size_t members = 0, positives = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (std::find(classes.begin(), classes.end(), groups[i]) == classes.end()) continue;
    ++members;
    positives += predicted[i] == 1 ? 1 : 0;
  }
  if (members == 0) {
    throw DegenerateGroupError(std::string("disparate impact: empty ") + label + " group");
  }
  return static_cast<double>(positives) / static_cast<double>(members);
}

}  // namespace

double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ParameterError("auc_roc: score and label counts differ");
  }
  if (scores.empty()) throw ParameterError("auc_roc: empty input");
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericInputError("auc_roc: non-finite score");
  }

  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y == 1 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DegenerateLabelsError("auc_roc: both classes required");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tied score runs, then the Mann-Whitney rank-sum identity.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::vector<double> auc_one_vs_all(const std::vector<std::vector<double>>& scores_per_class,
                                   const std::vector<int>& values, int n_classes) {
  if (n_classes < 2) throw ParameterError("auc_one_vs_all: need at least 2 classes");
  if (scores_per_class.size() != static_cast<std::size_t>(n_classes)) {
    throw ParameterError("auc_one_vs_all: score vector count does not match class count");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    if (scores_per_class[c].size() != values.size()) {
      throw ParameterError("auc_one_vs_all: score and value counts differ");
    }
    std::vector<int> labels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) labels[i] = values[i] == c ? 1 : 0;
    out.push_back(auc_roc(scores_per_class[c], labels));
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual) {
  if (predicted.size() != actual.size()) {
    throw ParameterError("accuracy: prediction and label counts differ");
  }
  if (predicted.empty()) throw ParameterError("accuracy: empty input");
  std::size_t matches = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    matches += predicted[i] == actual[i] ? 1 : 0;
  }
  return static_cast<double>(matches) / static_cast<double>(predicted.size());
}

double disparate_impact_binary(const std::vector<int>& predicted, const std::vector<int>& groups,
                               int privileged) {
  if (predicted.size() != groups.size()) {
    throw ParameterError("disparate_impact_binary: prediction and group counts differ");
  }
  std::size_t priv_n = 0, priv_pos = 0, unpriv_n = 0, unpriv_pos = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i] == privileged) {
      ++priv_n;
      priv_pos += predicted[i] == 1 ? 1 : 0;
    } else {
      ++unpriv_n;
      unpriv_pos += predicted[i] == 1 ? 1 : 0;
    }
  }
  if (priv_n == 0) throw DegenerateGroupError("disparate impact: empty privileged group");
  if (unpriv_n == 0) throw DegenerateGroupError("disparate impact: empty unprivileged group");
  return rate_ratio(static_cast<double>(unpriv_pos) / static_cast<double>(unpriv_n),
                    static_cast<double>(priv_pos) / static_cast<double>(priv_n));
}

double disparate_impact_average(const std::vector<int>& predicted, const std::vector<int>& groups,
                                const std::vector<int>& privileged_classes,
                                const std::vector<int>& unprivileged_classes) {
  if (predicted.size() != groups.size()) {
    throw ParameterError("disparate_impact_average: prediction and group counts differ");
  }
  if (privileged_classes.empty() || unprivileged_classes.empty()) {
    throw ParameterError("disparate_impact_average: both class sets must be nonempty");
  }
  std::vector<double> priv_rates, unpriv_rates;
  for (int p : privileged_classes) {
    priv_rates.push_back(positive_rate(predicted, groups, {p}, "privileged"));
  }
  for (int u : unprivileged_classes) {
    unpriv_rates.push_back(positive_rate(predicted, groups, {u}, "unprivileged"));
  }
  double sum = 0.0;
  for (double u : unpriv_rates) {
    for (double p : priv_rates) sum += rate_ratio(u, p);
  }
  return sum / static_cast<double>(priv_rates.size() * unpriv_rates.size());
}

double tau_default(const std::vector<int>& values) {
  if (values.empty()) throw ParameterError("tau_default: empty input");
  std::size_t ones = 0;
  for (int v : values) {
    if (v != 0 && v != 1) throw ParameterError("tau_default: values must be 0 or 1");
    ones += v;
  }
  const std::size_t zeros = values.size() - ones;
  return static_cast<double>(std::max(ones, zeros)) / static_cast<double>(values.size());
}

double tau_default_majority(const std::vector<int>& values, int n_classes) {
  if (values.empty()) throw ParameterError("tau_default_majority: empty input");
  if (n_classes < 2) throw ParameterError("tau_default_majority: need at least 2 classes");
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (int v : values) {
    if (v < 0 || v >= n_classes) {
      throw ParameterError("tau_default_majority: value outside class range");
    }
    ++counts[static_cast<std::size_t>(v)];
  }
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(values.size());
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string report_to_json(const FairnessReport& report) {
  nlohmann::ordered_json j;
  j["sensitive_column"] = report.sensitive_column;
  j["tau"] = report.tau;
  j["accuracy"] = report.accuracy;
  if (std::isinf(report.disparate_impact_binary)) {
    j["disparate_impact_binary"] = "inf";
  } else {
    j["disparate_impact_binary"] = report.disparate_impact_binary;
  }
  if (std::isinf(report.disparate_impact_average)) {
    j["disparate_impact_average"] = "inf";
  } else {
    j["disparate_impact_average"] = report.disparate_impact_average;
  }
  j["removed_columns"] = nlohmann::ordered_json::array();
  for (const auto& c : report.removed_columns) {
    nlohmann::ordered_json col;
    col["id"] = c.id;
    col["source_attribute"] = c.source_attribute;
    if (c.source_category) col["source_category"] = *c.source_category;
    j["removed_columns"].push_back(col);
  }
  j["final_sensitive_auc"] = report.final_sensitive_auc;
  return j.dump();
}

std::string report_csv_header() {
  return "sensitive_column,tau,accuracy,disparate_impact_binary,disparate_impact_average,"
         "n_removed,final_sensitive_auc";
}

std::string report_csv_row(const FairnessReport& report) {
  std::ostringstream out;
  out << report.sensitive_column << ',' << format_metric(report.tau) << ','
      << format_metric(report.accuracy) << ',' << format_metric(report.disparate_impact_binary)
      << ',' << format_metric(report.disparate_impact_average) << ','
      << report.removed_columns.size() << ',' << format_metric(report.final_sensitive_auc);
  return out.str();
}

}  // namespace pfr
