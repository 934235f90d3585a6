#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfr/dataset.hpp"

namespace pfr {

struct TrainConfig {
  int max_iterations = 5000;
  double step_size = 1.0;       // initial line-search step
  double tolerance = 1e-6;      // gradient infinity-norm stopping rule
  double l2_strength = 1e-4;    // ridge on weights, never on the intercept
  std::uint64_t seed = 0;
};

// Binary logistic regression: P(y=1|x) = sigmoid(x.w + b).
struct LogisticModel {
  std::vector<std::string> column_ids;
  std::vector<double> weights;
  double intercept = 0.0;
};

// Maximizes the l2-penalized mean log-likelihood
//   (1/n) sum_i [ y_i ln p_i + (1-y_i) ln(1-p_i) ] - (l2/2) |w|^2
// by deterministic full-batch L-BFGS with Armijo backtracking. Returns the
// model meeting the gradient tolerance, or the best iterate at the cap.
LogisticModel train_logistic(const EncodedMatrix& m, const std::vector<int>& labels,
                             const TrainConfig& cfg);

// Same trainer started from an existing iterate. Used by the removal loop to
// warm-start retrains; train_logistic is this with a zero initializer.
LogisticModel train_logistic_from(const EncodedMatrix& m, const std::vector<int>& labels,
                                  const TrainConfig& cfg, const LogisticModel& init);

std::vector<double> predict_proba(const LogisticModel& model, const EncodedMatrix& m);

std::vector<int> predict_label(const LogisticModel& model, const EncodedMatrix& m,
                               double threshold = 0.5);

// Column id with the maximum absolute weight; ties break to the lowest index.
// Requires min-max-scaled inputs for the weights to be comparable.
const std::string& most_important_feature(const LogisticModel& model);

// Gradient of the penalized mean log-likelihood at the model's parameters.
// Entries follow model.column_ids; the last entry is the intercept component.
std::vector<double> log_likelihood_gradient(const LogisticModel& model, const EncodedMatrix& m,
                                            const std::vector<int>& labels, double l2);

double penalized_log_likelihood(const LogisticModel& model, const EncodedMatrix& m,
                                const std::vector<int>& labels, double l2);

// Flat text record: column ids, weights, intercept, config hash.
std::string serialize_model(const LogisticModel& model, const TrainConfig& cfg);
LogisticModel parse_model(const std::string& text);

std::uint64_t train_config_hash(const TrainConfig& cfg);

}  // namespace pfr
