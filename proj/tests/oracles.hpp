#pragma once

// Second, deliberately naive implementations used as ground truth by the
// tests. Nothing here may call into the library's numeric code; keep the
// formulas in their textbook form so agreement is evidence, not tautology.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracles {

// AUC by enumerating every positive-negative pair, ties counted one half.
inline double brute_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

// Penalized mean log-likelihood in the direct textbook form, including the
// numerically naive log(sigmoid) evaluation. Parameter layout: weights for
// each column of x, intercept last. Ridge applies to weights only.
inline double naive_objective(const std::vector<std::vector<double>>& x,
                              const std::vector<int>& y, const std::vector<double>& params,
                              double l2) {
  const std::size_t d = params.size() - 1;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = params[d];
    for (std::size_t j = 0; j < d; ++j) z += params[j] * x[i][j];
    const double p = 1.0 / (1.0 + std::exp(-z));
    total += y[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  double penalty = 0.0;
  for (std::size_t j = 0; j < d; ++j) penalty += params[j] * params[j];
  return total / static_cast<double>(x.size()) - 0.5 * l2 * penalty;
}

// Central finite differences of the naive objective.
inline std::vector<double> fd_gradient(const std::vector<std::vector<double>>& x,
                                       const std::vector<int>& y, std::vector<double> params,
                                       double l2, double step = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + step;
    const double hi = naive_objective(x, y, params, l2);
    params[k] = saved - step;
    const double lo = naive_objective(x, y, params, l2);
    params[k] = saved;
    grad[k] = (hi - lo) / (2.0 * step);
  }
  return grad;
}

// Plain fixed-step batch gradient ascent on the same objective, independent of
// the library's optimizer. Stops on gradient infinity norm. Returns the
// parameter vector (weights then intercept).
inline std::vector<double> gd_train(const std::vector<std::vector<double>>& x,
                                    const std::vector<int>& y, double l2, double rate,
                                    long max_iters, double tol) {
  const std::size_t d = x.empty() ? 0 : x[0].size();
  std::vector<double> params(d + 1, 0.0);
  std::vector<double> grad(d + 1);
  for (long it = 0; it < max_iters; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      double z = params[d];
      for (std::size_t j = 0; j < d; ++j) z += params[j] * x[i][j];
      const double r = static_cast<double>(y[i]) - 1.0 / (1.0 + std::exp(-z));
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * x[i][j];
      grad[d] += r;
    }
    const double n = static_cast<double>(x.size());
    double sup = 0.0;
    for (std::size_t j = 0; j <= d; ++j) {
      grad[j] /= n;
      if (j < d) grad[j] -= l2 * params[j];
      sup = std::max(sup, std::fabs(grad[j]));
    }
    if (sup <= tol) break;
    for (std::size_t j = 0; j <= d; ++j) params[j] += rate * grad[j];
  }
  return params;
}

// Best achievable AUC of any single-feature monotone predictor for a binary
// target: a one-feature logistic fit is monotone in that feature, so its AUC
// is the feature's own rank AUC in whichever direction is stronger.
inline double single_feature_auc(const std::vector<double>& column,
                                 const std::vector<int>& target) {
  const double a = brute_auc(column, target);
  return a >= 0.5 ? a : 1.0 - a;
}

}  // namespace oracles
