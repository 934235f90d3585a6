#include "pfr/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <deque>
#include <sstream>
#include <unordered_map>

namespace pfr {

namespace {

// ln(1 + e^x) without overflow for large |x|.
double softplus(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Parameters are packed as [w_0 .. w_{d-1}, intercept]. The objective being
// minimized is the negated penalized mean log-likelihood.
struct Objective {
  const EncodedMatrix& m;
  const std::vector<int>& labels;
  double l2;

  double value(const std::vector<double>& theta) const {
    const std::size_t n = m.n_rows, d = m.n_cols();
    double ll = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double* x = m.row(r);
      double z = theta[d];
      for (std::size_t j = 0; j < d; ++j) z += x[j] * theta[j];
      // y ln p + (1-y) ln(1-p) with ln p = -softplus(-z), ln(1-p) = -softplus(z)
      ll -= labels[r] == 1 ? softplus(-z) : softplus(z);
    }
    ll /= static_cast<double>(n);
    double penalty = 0.0;
    for (std::size_t j = 0; j < d; ++j) penalty += theta[j] * theta[j];
    return -(ll - 0.5 * l2 * penalty);
  }

  // Minimization gradient: -( (1/n) X^T (y - p) - l2 w ) and matching intercept term.
  std::vector<double> gradient(const std::vector<double>& theta) const {
    const std::size_t n = m.n_rows, d = m.n_cols();
    std::vector<double> g(d + 1, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const double* x = m.row(r);
      double z = theta[d];
      for (std::size_t j = 0; j < d; ++j) z += x[j] * theta[j];
      const double residual = static_cast<double>(labels[r]) - sigmoid(z);
      for (std::size_t j = 0; j < d; ++j) g[j] += x[j] * residual;
      g[d] += residual;
    }
    for (std::size_t j = 0; j <= d; ++j) g[j] = -g[j] / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) g[j] += l2 * theta[j];
    return g;
  }
};

struct CurvaturePair {
  std::vector<double> s, y;
  double rho;
};

// Two-loop recursion with gamma scaling; falls back to steepest descent on an
// empty history.
std::vector<double> lbfgs_direction(const std::vector<double>& g,
                                    const std::deque<CurvaturePair>& history) {
  std::vector<double> q = g;
  std::vector<double> alpha(history.size());
  for (std::size_t k = history.size(); k-- > 0;) {
    alpha[k] = history[k].rho * dot(history[k].s, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[k] * history[k].y[j];
  }
  if (!history.empty()) {
    const auto& last = history.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& x : q) x *= gamma;
  }
  for (std::size_t k = 0; k < history.size(); ++k) {
    const double beta = history[k].rho * dot(history[k].y, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[k] - beta) * history[k].s[j];
  }
  for (double& x : q) x = -x;
  return q;
}

LogisticModel optimize(const EncodedMatrix& m, const std::vector<int>& labels,
                       const TrainConfig& cfg, std::vector<double> theta) {
  if (m.n_cols() == 0) throw EmptyModelError("train_logistic: matrix has no columns");
  if (labels.size() != m.n_rows) {
    throw ParameterError("train_logistic: label count does not match rows");
  }
  if (cfg.max_iterations < 1) throw ParameterError("train_logistic: max_iterations must be >= 1");
  if (cfg.tolerance <= 0.0) throw ParameterError("train_logistic: tolerance must be positive");
  if (cfg.l2_strength < 0.0) throw ParameterError("train_logistic: l2_strength must be >= 0");
  bool has0 = false, has1 = false;
  for (int y : labels) (y == 1 ? has1 : has0) = true;
  if (!has0 || !has1) throw DegenerateLabelsError("train_logistic: both classes required");
  for (double v : m.values) {
    if (!std::isfinite(v)) throw NumericInputError("train_logistic: non-finite feature value");
  }

  const Objective obj{m, labels, cfg.l2_strength};
  constexpr std::size_t kHistory = 10;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 40;

  std::deque<CurvaturePair> history;
  double f = obj.value(theta);
  std::vector<double> g = obj.gradient(theta);

  std::vector<double> best_theta = theta;
  double best_f = f;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (inf_norm(g) <= cfg.tolerance) break;

    std::vector<double> dir = lbfgs_direction(g, history);
    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      for (std::size_t j = 0; j < dir.size(); ++j) dir[j] = -g[j];
      slope = dot(g, dir);
    }

    double step = cfg.step_size;
    std::vector<double> next(theta.size());
    double f_next = f;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      for (std::size_t j = 0; j < theta.size(); ++j) next[j] = theta[j] + step * dir[j];
      f_next = obj.value(next);
      if (std::isfinite(f_next) && f_next <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> g_next = obj.gradient(next);
    CurvaturePair pair;
    pair.s.resize(theta.size());
    pair.y.resize(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
      pair.s[j] = next[j] - theta[j];
      pair.y[j] = g_next[j] - g[j];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-12 * std::sqrt(dot(pair.s, pair.s)) * std::sqrt(dot(pair.y, pair.y))) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (history.size() > kHistory) history.pop_front();
    }

    theta = std::move(next);
    f = f_next;
    g = std::move(g_next);
    if (f < best_f) {
      best_f = f;
      best_theta = theta;
    }
  }
  if (f < best_f) best_theta = theta;

  LogisticModel model;
  model.column_ids = m.column_ids();
  model.weights.assign(best_theta.begin(), best_theta.end() - 1);
  model.intercept = best_theta.back();
  return model;
}

}  // namespace

LogisticModel train_logistic(const EncodedMatrix& m, const std::vector<int>& labels,
                             const TrainConfig& cfg) {
  return optimize(m, labels, cfg, std::vector<double>(m.n_cols() + 1, 0.0));
}

LogisticModel train_logistic_from(const EncodedMatrix& m, const std::vector<int>& labels,
                                  const TrainConfig& cfg, const LogisticModel& init) {
  // The initializer may come from a model trained before a column removal:
  // matching ids carry their weight over, anything else starts at zero.
  std::unordered_map<std::string, double> by_id;
  for (std::size_t i = 0; i < init.column_ids.size(); ++i) {
    by_id.emplace(init.column_ids[i], init.weights[i]);
  }
  std::vector<double> theta(m.n_cols() + 1, 0.0);
  for (std::size_t j = 0; j < m.n_cols(); ++j) {
    auto it = by_id.find(m.columns[j].id);
    if (it != by_id.end()) theta[j] = it->second;
  }
  theta.back() = init.intercept;
  return optimize(m, labels, cfg, std::move(theta));
}

std::vector<double> predict_proba(const LogisticModel& model, const EncodedMatrix& m) {
  if (model.column_ids.empty()) throw EmptyModelError("predict_proba: model has no columns");
  // The matrix may hold more columns than the model; map by id.
  std::vector<std::size_t> pos(model.column_ids.size());
  for (std::size_t k = 0; k < model.column_ids.size(); ++k) {
    auto idx = m.column_index(model.column_ids[k]);
    if (!idx) {
      throw ColumnMismatchError("predict_proba: matrix lacks column " + model.column_ids[k]);
    }
    pos[k] = *idx;
  }
  std::vector<double> out(m.n_rows);
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    const double* x = m.row(r);
    double z = model.intercept;
    for (std::size_t k = 0; k < pos.size(); ++k) z += x[pos[k]] * model.weights[k];
    out[r] = sigmoid(z);
  }
  return out;
}

std::vector<int> predict_label(const LogisticModel& model, const EncodedMatrix& m,
                               double threshold) {
  std::vector<double> p = predict_proba(model, m);
  std::vector<int> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= threshold ? 1 : 0;
  return out;
}

const std::string& most_important_feature(const LogisticModel& model) {
  if (model.weights.empty()) throw EmptyModelError("most_important_feature: model has no columns");
  std::size_t best = 0;
  for (std::size_t i = 1; i < model.weights.size(); ++i) {
    if (std::abs(model.weights[i]) > std::abs(model.weights[best])) best = i;
  }
  return model.column_ids[best];
}

std::vector<double> log_likelihood_gradient(const LogisticModel& model, const EncodedMatrix& m,
                                            const std::vector<int>& labels, double l2) {
  if (model.column_ids.size() != m.n_cols()) {
    throw ColumnMismatchError("log_likelihood_gradient: model and matrix column counts differ");
  }
  if (labels.size() != m.n_rows) {
    throw ParameterError("log_likelihood_gradient: label count does not match rows");
  }
  std::vector<double> theta(model.weights);
  theta.push_back(model.intercept);
  std::vector<double> g = Objective{m, labels, l2}.gradient(theta);
  for (double& x : g) x = -x;  // back to the ascent direction
  return g;
}

double penalized_log_likelihood(const LogisticModel& model, const EncodedMatrix& m,
                                const std::vector<int>& labels, double l2) {
  if (model.column_ids.size() != m.n_cols()) {
    throw ColumnMismatchError("penalized_log_likelihood: model and matrix column counts differ");
  }
  if (labels.size() != m.n_rows) {
    throw ParameterError("penalized_log_likelihood: label count does not match rows");
  }
  std::vector<double> theta(model.weights);
  theta.push_back(model.intercept);
  return -Objective{m, labels, l2}.value(theta);
}

std::uint64_t train_config_hash(const TrainConfig& cfg) {
  // FNV-1a over the numeric fields' raw bits.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(cfg.max_iterations));
  mix(std::bit_cast<std::uint64_t>(cfg.step_size));
  mix(std::bit_cast<std::uint64_t>(cfg.tolerance));
  mix(std::bit_cast<std::uint64_t>(cfg.l2_strength));
  mix(cfg.seed);
  return h;
}

std::string serialize_model(const LogisticModel& model, const TrainConfig& cfg) {
  std::ostringstream out;
  char buf[40];
  out << "logistic-model v1\n";
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(train_config_hash(cfg)));
  out << "config_hash " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", model.intercept);
  out << "intercept " << buf << "\n";
  out << "columns " << model.column_ids.size() << "\n";
  for (std::size_t i = 0; i < model.column_ids.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", model.weights[i]);
    out << model.column_ids[i] << "\t" << buf << "\n";
  }
  return out.str();
}

LogisticModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) throw ValidationError(std::string("model record: missing ") + what);
    return line;
  };
  if (next_line("magic") != "logistic-model v1") {
    throw ValidationError("model record: bad magic line");
  }
  if (next_line("config hash").rfind("config_hash ", 0) != 0) {
    throw ValidationError("model record: bad config hash line");
  }
  LogisticModel model;
  {
    std::istringstream ls(next_line("intercept"));
    std::string tag;
    if (!(ls >> tag >> model.intercept) || tag != "intercept") {
      throw ValidationError("model record: bad intercept line");
    }
  }
  std::size_t count = 0;
  {
    std::istringstream ls(next_line("column count"));
    std::string tag;
    if (!(ls >> tag >> count) || tag != "columns") {
      throw ValidationError("model record: bad column count line");
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    next_line("column row");
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ValidationError("model record: bad column row");
    model.column_ids.push_back(line.substr(0, tab));
    try {
      model.weights.push_back(std::stod(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw ValidationError("model record: bad weight value");
    }
  }
  return model;
}

}  // namespace pfr
