#include "pfr/pfr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "pfr/rng.hpp"

namespace pfr {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kHoldoutSalt = 0x401d;
constexpr std::uint64_t kRecheckSalt = 0x7ec4;

void validate_loop_config(const PfrConfig& cfg) {
  if (cfg.max_removals != -1 && cfg.max_removals < 1) {
    throw ParameterError("pfr: max_removals must be -1 or >= 1");
  }
  if (cfg.auc_slack < 0.0) throw ParameterError("pfr: auc_slack must be >= 0");
  if (cfg.holdout_fraction < 0.0 || cfg.holdout_fraction >= 1.0) {
    throw ParameterError("pfr: holdout_fraction must lie in [0, 1)");
  }
}

void validate_tau(double tau, const std::string& name) {
  if (!(tau > 0.5 && tau <= 1.0)) {
    std::ostringstream msg;
    msg << "pfr: tau must lie in (0.5, 1], got " << tau;
    if (!name.empty()) msg << " for " << name;
    throw ParameterError(msg.str());
  }
}

// One sensitive-predictor fit on the current feature set, returning the model
// and the AUC the loop's guard compares against tau.
struct FitOutcome {
  LogisticModel model;
  double auc = 0.0;
};

FitOutcome fit_and_score(const EncodedMatrix& train_m, const std::vector<int>& train_labels,
                         const EncodedMatrix* eval_m, const std::vector<int>* eval_labels,
                         const PfrConfig& cfg, const LogisticModel* warm,
                         std::uint64_t sample_seed) {
  FitOutcome out;
  if (cfg.oversample) {
    auto [balanced, balanced_labels] = oversample_minority(train_m, train_labels, sample_seed);
    out.model = warm ? train_logistic_from(balanced, balanced_labels, cfg.train_config, *warm)
                     : train_logistic(balanced, balanced_labels, cfg.train_config);
    if (eval_m) {
      out.auc = auc_roc(predict_proba(out.model, *eval_m), *eval_labels);
    } else {
      out.auc = auc_roc(predict_proba(out.model, balanced), balanced_labels);
    }
  } else {
    out.model = warm ? train_logistic_from(train_m, train_labels, cfg.train_config, *warm)
                     : train_logistic(train_m, train_labels, cfg.train_config);
    if (eval_m) {
      out.auc = auc_roc(predict_proba(out.model, *eval_m), *eval_labels);
    } else {
      out.auc = auc_roc(predict_proba(out.model, train_m), train_labels);
    }
  }
  return out;
}

PfrResult run_binary_loop(const EncodedMatrix& m, const std::vector<int>& labels, double tau,
                          const PfrConfig& cfg, const std::string& name, std::uint64_t salt) {
  validate_loop_config(cfg);
  validate_tau(tau, name);
  if (!m.scaled()) throw ParameterError("pfr: matrix must be min-max scaled");
  if (labels.size() != m.n_rows) throw ParameterError("pfr: label count does not match rows");
  bool has0 = false, has1 = false;
  for (int y : labels) (y == 1 ? has1 : has0) = true;
  if (!has0 || !has1) {
    throw DegenerateLabelsError("pfr: sensitive attribute " + name + " has a single class");
  }

  const std::size_t cap = cfg.max_removals == -1 ? m.n_cols() - 1
                                                 : static_cast<std::size_t>(cfg.max_removals);

  // Optional holdout: the guard's AUC comes from rows the predictor never saw.
  EncodedMatrix train_m = m, eval_m;
  std::vector<int> train_labels = labels, eval_labels;
  const bool holdout = cfg.holdout_fraction > 0.0;
  if (holdout) {
    SplitResult sp = split(m, labels, 1.0 - cfg.holdout_fraction,
                           mix_seed(cfg.seed, salt, kHoldoutSalt));
    train_m = std::move(sp.train);
    eval_m = std::move(sp.eval);
    train_labels = std::move(sp.train_labels);
    eval_labels = std::move(sp.eval_labels);
  }

  RemovalTrace trace;
  trace.sensitive_column = name;
  trace.tau = tau;
  trace.initial_columns = m.columns;

  std::uint64_t iteration = 0;
  FitOutcome fit = fit_and_score(train_m, train_labels, holdout ? &eval_m : nullptr,
                                 holdout ? &eval_labels : nullptr, cfg, nullptr,
                                 mix_seed(cfg.seed, salt, iteration));

  while (fit.auc > tau) {
    if (trace.steps.size() >= cap || train_m.n_cols() <= 1) {
      trace.truncated = true;
      trace.final_columns = train_m.columns;
      trace.final_auc = fit.auc;
      std::ostringstream msg;
      msg << "pfr: " << (name.empty() ? "sensitive attribute" : name) << " still predictable (auc "
          << fit.auc << " > tau " << tau << ") after " << trace.steps.size() << " removals";
      throw ExhaustedFeaturesError(msg.str(), std::move(trace));
    }

    const std::string removed_id = most_important_feature(fit.model);
    const std::size_t removed_pos = *train_m.column_index(removed_id);

    RemovalStep step;
    step.sensitive_column = name;
    step.iteration = static_cast<int>(trace.steps.size()) + 1;
    step.removed_column = train_m.columns[removed_pos];
    step.auc_before = fit.auc;
    for (std::size_t k = 0; k < fit.model.column_ids.size(); ++k) {
      if (fit.model.column_ids[k] == removed_id) {
        step.weight_of_removed = fit.model.weights[k];
        break;
      }
    }

    train_m = drop_columns(train_m, {removed_id});
    if (holdout) eval_m = drop_columns(eval_m, {removed_id});

    ++iteration;
    const LogisticModel* warm = cfg.warm_start ? &fit.model : nullptr;
    fit = fit_and_score(train_m, train_labels, holdout ? &eval_m : nullptr,
                        holdout ? &eval_labels : nullptr, cfg, warm,
                        mix_seed(cfg.seed, salt, iteration));
    step.auc_after = fit.auc;
    trace.steps.push_back(std::move(step));
  }

  trace.final_auc = fit.auc;
  trace.final_columns = train_m.columns;

  PfrResult result;
  // The residual keeps every original row; the holdout partition only steers
  // the guard statistic.
  result.matrix = holdout ? drop_columns(m, trace.removed_ids()) : std::move(train_m);
  result.trace = std::move(trace);
  return result;
}

// Multi-class variant: one predictor per class, guard statistic is the largest
// one-vs-all AUC, removal comes from the model of the class holding it.
PfrResult run_one_vs_all_loop(const EncodedMatrix& m, const SensitiveColumn& column, double tau,
                              const PfrConfig& cfg, std::uint64_t salt) {
  validate_loop_config(cfg);
  const std::string& name = column.spec.column;
  validate_tau(tau, name);
  if (!m.scaled()) throw ParameterError("pfr: matrix must be min-max scaled");
  if (column.codes.size() != m.n_rows) throw ParameterError("pfr: label count does not match rows");

  const int k = static_cast<int>(column.spec.classes.size());
  std::vector<std::vector<int>> class_labels(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    auto& labels = class_labels[static_cast<std::size_t>(c)];
    labels.resize(column.codes.size());
    for (std::size_t i = 0; i < column.codes.size(); ++i) {
      labels[i] = column.codes[i] == c ? 1 : 0;
    }
  }
  for (int c = 0; c < k; ++c) {
    if (std::find(class_labels[static_cast<std::size_t>(c)].begin(),
                  class_labels[static_cast<std::size_t>(c)].end(),
                  1) == class_labels[static_cast<std::size_t>(c)].end()) {
      throw DegenerateLabelsError("pfr: sensitive attribute " + name + " lacks class " +
                                  column.spec.classes[static_cast<std::size_t>(c)]);
    }
  }

  const std::size_t cap = cfg.max_removals == -1 ? m.n_cols() - 1
                                                 : static_cast<std::size_t>(cfg.max_removals);

  RemovalTrace trace;
  trace.sensitive_column = name;
  trace.tau = tau;
  trace.initial_columns = m.columns;

  EncodedMatrix current = m;
  std::vector<FitOutcome> fits(static_cast<std::size_t>(k));
  std::uint64_t iteration = 0;

  auto refit_all = [&](const std::vector<FitOutcome>* previous) {
    for (int c = 0; c < k; ++c) {
      const LogisticModel* warm =
          previous && cfg.warm_start ? &(*previous)[static_cast<std::size_t>(c)].model : nullptr;
      fits[static_cast<std::size_t>(c)] =
          fit_and_score(current, class_labels[static_cast<std::size_t>(c)], nullptr, nullptr, cfg,
                        warm, mix_seed(cfg.seed, salt, iteration, static_cast<std::uint64_t>(c)));
    }
  };
  auto argmax_class = [&]() {
    std::size_t best = 0;
    for (std::size_t c = 1; c < fits.size(); ++c) {
      if (fits[c].auc > fits[best].auc) best = c;
    }
    return best;
  };

  refit_all(nullptr);
  std::size_t top = argmax_class();

  while (fits[top].auc > tau) {
    if (trace.steps.size() >= cap || current.n_cols() <= 1) {
      trace.truncated = true;
      trace.final_columns = current.columns;
      trace.final_auc = fits[top].auc;
      std::ostringstream msg;
      msg << "pfr: " << name << " still predictable (auc " << fits[top].auc << " > tau " << tau
          << ") after " << trace.steps.size() << " removals";
      throw ExhaustedFeaturesError(msg.str(), std::move(trace));
    }

    const std::string removed_id = most_important_feature(fits[top].model);
    const std::size_t removed_pos = *current.column_index(removed_id);

    RemovalStep step;
    step.sensitive_column = name;
    step.iteration = static_cast<int>(trace.steps.size()) + 1;
    step.removed_column = current.columns[removed_pos];
    step.auc_before = fits[top].auc;
    for (std::size_t j = 0; j < fits[top].model.column_ids.size(); ++j) {
      if (fits[top].model.column_ids[j] == removed_id) {
        step.weight_of_removed = fits[top].model.weights[j];
        break;
      }
    }

    current = drop_columns(current, {removed_id});
    ++iteration;
    std::vector<FitOutcome> previous = std::move(fits);
    fits.assign(static_cast<std::size_t>(k), FitOutcome{});
    refit_all(&previous);
    top = argmax_class();
    step.auc_after = fits[top].auc;
    trace.steps.push_back(std::move(step));
  }

  trace.final_auc = fits[top].auc;
  trace.final_columns = current.columns;
  return {std::move(current), std::move(trace)};
}

}  // namespace

std::vector<std::string> RemovalTrace::removed_ids() const {
  std::vector<std::string> ids;
  ids.reserve(steps.size());
  for (const auto& s : steps) ids.push_back(s.removed_column.id);
  return ids;
}

PfrResult pfr_run(const EncodedMatrix& m, const std::vector<int>& sensitive_binary, double tau,
                  const PfrConfig& cfg) {
  return run_binary_loop(m, sensitive_binary, tau, cfg, "", 0);
}

double default_tau_for(const SensitiveColumn& column, MulticlassMode mode) {
  if (column.spec.classes.size() > 2 && mode == MulticlassMode::one_vs_all) {
    return tau_default_majority(column.codes, static_cast<int>(column.spec.classes.size()));
  }
  return tau_default(column.privileged_indicator());
}

MultiResult pfr_multi(const EncodedMatrix& m, const std::vector<SensitiveColumn>& sensitive,
                      const PfrConfig& cfg) {
  for (const auto& [name, tau] : cfg.tau_overrides) validate_tau(tau, name);

  std::vector<const SensitiveColumn*> order;
  if (cfg.sensitive_order.empty()) {
    for (const auto& col : sensitive) order.push_back(&col);
  } else {
    for (const auto& name : cfg.sensitive_order) {
      auto it = std::find_if(sensitive.begin(), sensitive.end(),
                             [&](const SensitiveColumn& c) { return c.spec.column == name; });
      if (it == sensitive.end()) throw ParameterError("pfr: unknown sensitive column: " + name);
      order.push_back(&*it);
    }
  }

  MultiResult result;
  result.matrix = m;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const SensitiveColumn* col = order[pos];
    const std::string& name = col->spec.column;
    double tau;
    if (auto it = cfg.tau_overrides.find(name); it != cfg.tau_overrides.end()) {
      tau = it->second;
    } else {
      tau = default_tau_for(*col, cfg.multiclass_mode);
    }

    // Salt by processing position so a single-attribute run matches pfr_run exactly.
    PfrResult one;
    if (col->spec.classes.size() > 2 && cfg.multiclass_mode == MulticlassMode::one_vs_all) {
      one = run_one_vs_all_loop(result.matrix, *col, tau, cfg, pos);
    } else {
      one = run_binary_loop(result.matrix, col->privileged_indicator(), tau, cfg, name, pos);
    }
    result.matrix = std::move(one.matrix);
    result.traces.push_back(std::move(one.trace));
  }
  return result;
}

MultiResult pfr_multi(const EncodedMatrix& m, const TabularDataset& dataset,
                      const PfrConfig& cfg) {
  return pfr_multi(m, dataset.sensitive, cfg);
}

LogisticModel train_fair_model(const EncodedMatrix& residual, const std::vector<int>& target,
                               const TrainConfig& cfg) {
  if (residual.n_cols() == 0) {
    RemovalTrace empty;
    throw ExhaustedFeaturesError("train_fair_model: no features remain", std::move(empty));
  }
  return train_logistic(residual, target, cfg);
}

std::map<std::string, double> recheck(const EncodedMatrix& residual,
                                      const std::vector<SensitiveColumn>& sensitive,
                                      const PfrConfig& cfg) {
  std::map<std::string, double> out;
  for (const auto& col : sensitive) {
    const std::uint64_t salt = fnv1a(col.spec.column);
    double auc;
    if (col.spec.classes.size() > 2 && cfg.multiclass_mode == MulticlassMode::one_vs_all) {
      const int k = static_cast<int>(col.spec.classes.size());
      auc = 0.0;
      for (int c = 0; c < k; ++c) {
        std::vector<int> labels(col.codes.size());
        for (std::size_t i = 0; i < col.codes.size(); ++i) {
          labels[i] = col.codes[i] == c ? 1 : 0;
        }
        FitOutcome fit = fit_and_score(residual, labels, nullptr, nullptr, cfg, nullptr,
                                       mix_seed(cfg.seed, salt, kRecheckSalt,
                                                static_cast<std::uint64_t>(c)));
        auc = std::max(auc, fit.auc);
      }
    } else {
      FitOutcome fit = fit_and_score(residual, col.privileged_indicator(), nullptr, nullptr, cfg,
                                     nullptr, mix_seed(cfg.seed, salt, kRecheckSalt));
      auc = fit.auc;
    }
    out.emplace(col.spec.column, auc);
  }
  return out;
}

std::string trace_to_jsonl(const RemovalTrace& trace) {
  auto column_json = [](const EncodedColumn& c) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["source_attribute"] = c.source_attribute;
    if (c.source_category) {
      j["source_category"] = *c.source_category;
    } else {
      j["source_category"] = nullptr;
    }
    return j;
  };

  std::ostringstream out;
  nlohmann::ordered_json head;
  head["record"] = "trace";
  head["sensitive"] = trace.sensitive_column;
  head["tau"] = trace.tau;
  head["final_auc"] = trace.final_auc;
  head["truncated"] = trace.truncated;
  head["initial_columns"] = nlohmann::ordered_json::array();
  for (const auto& c : trace.initial_columns) head["initial_columns"].push_back(column_json(c));
  head["final_columns"] = nlohmann::ordered_json::array();
  for (const auto& c : trace.final_columns) head["final_columns"].push_back(column_json(c));
  out << head.dump() << "\n";

  for (const auto& s : trace.steps) {
    nlohmann::ordered_json j;
    j["record"] = "step";
    j["sensitive"] = s.sensitive_column;
    j["iteration"] = s.iteration;
    j["column"] = s.removed_column.id;
    j["source_attribute"] = s.removed_column.source_attribute;
    if (s.removed_column.source_category) {
      j["source_category"] = *s.removed_column.source_category;
    } else {
      j["source_category"] = nullptr;
    }
    j["auc_before"] = s.auc_before;
    j["auc_after"] = s.auc_after;
    j["weight"] = s.weight_of_removed;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<RemovalTrace> traces_from_jsonl(const std::string& text) {
  auto column_from = [](const nlohmann::json& j) {
    EncodedColumn c;
    c.id = j.at("id").get<std::string>();
    c.source_attribute = j.at("source_attribute").get<std::string>();
    if (j.contains("source_category") && !j.at("source_category").is_null()) {
      c.source_category = j.at("source_category").get<std::string>();
    }
    return c;
  };

  std::vector<RemovalTrace> traces;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      const std::string kind = j.at("record").get<std::string>();
      if (kind == "trace") {
        RemovalTrace t;
        t.sensitive_column = j.at("sensitive").get<std::string>();
        t.tau = j.at("tau").get<double>();
        t.final_auc = j.at("final_auc").get<double>();
        t.truncated = j.at("truncated").get<bool>();
        for (const auto& c : j.at("initial_columns")) t.initial_columns.push_back(column_from(c));
        for (const auto& c : j.at("final_columns")) t.final_columns.push_back(column_from(c));
        traces.push_back(std::move(t));
      } else if (kind == "step") {
        if (traces.empty()) {
          throw ValidationError("trace line " + std::to_string(line_no) +
                                ": step before any trace record");
        }
        RemovalStep s;
        s.sensitive_column = j.at("sensitive").get<std::string>();
        s.iteration = j.at("iteration").get<int>();
        s.removed_column.id = j.at("column").get<std::string>();
        s.removed_column.source_attribute = j.at("source_attribute").get<std::string>();
        if (!j.at("source_category").is_null()) {
          s.removed_column.source_category = j.at("source_category").get<std::string>();
        }
        s.auc_before = j.at("auc_before").get<double>();
        s.auc_after = j.at("auc_after").get<double>();
        s.weight_of_removed = j.at("weight").get<double>();
        traces.back().steps.push_back(std::move(s));
      } else {
        throw ValidationError("trace line " + std::to_string(line_no) + ": unknown record kind");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return traces;
}

}  // namespace pfr
