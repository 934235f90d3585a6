#include "pfr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

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

constexpr std::uint64_t kSplitSalt = 0x5b17;
constexpr std::uint64_t kBaselineSalt = 0xba5e;
constexpr std::uint64_t kFairFitSalt = 0xfa12;

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += '+';
    out += names[i];
  }
  return out;
}

std::string format_tau_for_filename(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", tau);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base,
                                   const std::string& field) {
  for (const auto& [key, value] : j.items()) {
    if (key == "max_iterations") {
      base.max_iterations = value.get<int>();
    } else if (key == "step_size") {
      base.step_size = value.get<double>();
    } else if (key == "tolerance") {
      base.tolerance = value.get<double>();
    } else if (key == "l2_strength") {
      base.l2_strength = value.get<double>();
    } else if (key == "seed") {
      base.seed = value.get<std::uint64_t>();
    } else {
      throw ConfigError("experiment config: unknown key " + field + "." + key);
    }
  }
  return base;
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
  if (path.empty() || path.front() == '/' || base_dir.empty()) return path;
  return base_dir + "/" + path;
}

// DI farthest from the 1.0 ideal; the honest summary for a multi-attribute set.
double worst_di(const std::vector<double>& values) {
  double worst = 1.0;
  for (double v : values) {
    const double dist = std::isinf(v) ? v : std::abs(v - 1.0);
    const double worst_dist = std::isinf(worst) ? worst : std::abs(worst - 1.0);
    if (dist > worst_dist) worst = v;
  }
  return worst;
}

struct EvalContext {
  const EncodedMatrix& eval_m;
  const std::vector<int>& eval_labels;
  const std::vector<SensitiveColumn>& eval_sensitive;  // aligned with set order
};

struct SetMetrics {
  double accuracy = 0.0;
  std::vector<double> di_binary;   // per attribute
  std::vector<double> di_average;  // per attribute
};

SetMetrics evaluate_model(const LogisticModel& model, const EvalContext& ctx) {
  SetMetrics out;
  const std::vector<int> predicted = predict_label(model, ctx.eval_m);
  out.accuracy = accuracy(predicted, ctx.eval_labels);
  for (const auto& col : ctx.eval_sensitive) {
    out.di_binary.push_back(disparate_impact_binary(predicted, col.codes, col.privileged_code));
    std::vector<int> unprivileged;
    for (int c = 0; c < static_cast<int>(col.spec.classes.size()); ++c) {
      if (c != col.privileged_code) unprivileged.push_back(c);
    }
    out.di_average.push_back(
        disparate_impact_average(predicted, col.codes, {col.privileged_code}, unprivileged));
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: invalid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  bool have_dataset = false;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dataset") {
        have_dataset = true;
        if (value.is_string()) {
          cfg.dataset = DatasetConfig::from_json_file(
              resolve_path(value.get<std::string>(), base_dir));
        } else if (value.is_object()) {
          cfg.dataset = DatasetConfig::from_json_text(value.dump());
          cfg.dataset.path = resolve_path(cfg.dataset.path, base_dir);
        } else {
          throw ConfigError("experiment config: dataset must be a path or an object");
        }
      } else if (key == "sensitive_sets") {
        cfg.sensitive_sets = value.get<std::vector<std::vector<std::string>>>();
      } else if (key == "tau_grid") {
        cfg.tau_grid = value.get<std::vector<double>>();
      } else if (key == "split_fraction") {
        cfg.split_fraction = value.get<double>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "output_dir") {
        cfg.output_dir = value.get<std::string>();
      } else if (key == "oversample") {
        cfg.oversample = value.get<bool>();
      } else if (key == "auc_slack") {
        cfg.auc_slack = value.get<double>();
      } else if (key == "max_removals") {
        cfg.max_removals = value.get<int>();
      } else if (key == "holdout_fraction") {
        cfg.holdout_fraction = value.get<double>();
      } else if (key == "multiclass_mode") {
        const std::string mode = value.get<std::string>();
        if (mode == "privileged_vs_rest") {
          cfg.multiclass_mode = MulticlassMode::privileged_vs_rest;
        } else if (mode == "one_vs_all") {
          cfg.multiclass_mode = MulticlassMode::one_vs_all;
        } else {
          throw ConfigError("experiment config: multiclass_mode must be "
                            "privileged_vs_rest or one_vs_all");
        }
      } else if (key == "loop_train") {
        cfg.loop_train = train_config_from_json(value, cfg.loop_train, "loop_train");
      } else if (key == "model_train") {
        cfg.model_train = train_config_from_json(value, cfg.model_train, "model_train");
      } else if (key == "workers") {
        cfg.workers = value.get<int>();
      } else {
        throw ConfigError("experiment config: unknown key " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }

  if (!have_dataset) throw ConfigError("experiment config: missing dataset");
  if (cfg.tau_grid.empty()) throw ConfigError("experiment config: tau_grid must be nonempty");
  for (std::size_t i = 0; i < cfg.tau_grid.size(); ++i) {
    if (!(cfg.tau_grid[i] > 0.5 && cfg.tau_grid[i] <= 1.0)) {
      throw ConfigError("experiment config: tau_grid[" + std::to_string(i) +
                        "] must lie in (0.5, 1]");
    }
  }
  if (cfg.sensitive_sets.empty()) {
    throw ConfigError("experiment config: sensitive_sets must be nonempty");
  }
  for (std::size_t i = 0; i < cfg.sensitive_sets.size(); ++i) {
    if (cfg.sensitive_sets[i].empty()) {
      throw ConfigError("experiment config: sensitive_sets[" + std::to_string(i) + "] is empty");
    }
    std::set<std::string> seen;
    for (const auto& name : cfg.sensitive_sets[i]) {
      if (!seen.insert(name).second) {
        throw ConfigError("experiment config: sensitive_sets[" + std::to_string(i) +
                          "] repeats " + name);
      }
    }
  }
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0)) {
    throw ConfigError("experiment config: split_fraction must lie in (0, 1)");
  }
  if (cfg.output_dir.empty()) throw ConfigError("experiment config: missing output_dir");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string base_dir;
  if (auto slash = path.find_last_of('/'); slash != std::string::npos) {
    base_dir = path.substr(0, slash);
  }
  return from_json_text(ss.str(), base_dir);
}

std::vector<RateCurveRow> positive_rate_curve(const LogisticModel& model, const EncodedMatrix& m,
                                              const SensitiveColumn& sensitive) {
  if (sensitive.codes.size() != m.n_rows) {
    throw ParameterError("positive_rate_curve: group count does not match rows");
  }
  const std::vector<double> scores = predict_proba(model, m);
  std::vector<std::size_t> priv_rows, unpriv_rows;
  for (std::size_t i = 0; i < sensitive.codes.size(); ++i) {
    (sensitive.codes[i] == sensitive.privileged_code ? priv_rows : unpriv_rows).push_back(i);
  }
  if (priv_rows.empty()) throw DegenerateGroupError("positive_rate_curve: empty privileged group");
  if (unpriv_rows.empty()) {
    throw DegenerateGroupError("positive_rate_curve: empty unprivileged group");
  }

  std::vector<RateCurveRow> out;
  out.reserve(101);
  for (int t = 0; t <= 100; ++t) {
    RateCurveRow row;
    row.threshold = static_cast<double>(t) / 100.0;
    std::size_t priv_pos = 0, unpriv_pos = 0;
    for (std::size_t r : priv_rows) priv_pos += scores[r] >= row.threshold ? 1 : 0;
    for (std::size_t r : unpriv_rows) unpriv_pos += scores[r] >= row.threshold ? 1 : 0;
    row.rate_privileged = static_cast<double>(priv_pos) / static_cast<double>(priv_rows.size());
    row.rate_unprivileged =
        static_cast<double>(unpriv_pos) / static_cast<double>(unpriv_rows.size());
    out.push_back(row);
  }
  return out;
}

std::string emit_table_report(const std::vector<RemovalTrace>& traces) {
  // Attributes in first-removal order, their category values sorted; numeric
  // columns render as "continuous".
  std::vector<std::string> order;
  std::map<std::string, std::set<std::string>> values;
  bool any = false;
  for (const auto& trace : traces) {
    for (const auto& step : trace.steps) {
      any = true;
      const auto& col = step.removed_column;
      if (!values.count(col.source_attribute)) order.push_back(col.source_attribute);
      values[col.source_attribute].insert(col.source_category ? *col.source_category
                                                              : std::string("continuous"));
    }
  }
  std::ostringstream out;
  out << "Detected features by source attribute:\n";
  if (!any) return out.str();
  for (const auto& attr : order) {
    out << "  " << attr << ": ";
    bool first = true;
    for (const auto& v : values[attr]) {
      if (!first) out << ", ";
      out << v;
      first = false;
    }
    out << "\n";
  }
  return out.str();
}

std::string sweep_csv_header() {
  return "sensitive_set,tau,baseline,accuracy,di_binary,di_average,n_removed,final_auc_max,error";
}

std::string sweep_csv_row(const SweepRow& row) {
  std::ostringstream out;
  out << row.sensitive_set << ',';
  if (!row.baseline) out << format_metric(row.tau);
  out << ',' << (row.baseline ? 1 : 0) << ',';
  if (row.error.empty()) {
    out << format_metric(row.accuracy) << ',' << format_metric(row.di_binary) << ','
        << format_metric(row.di_average);
  } else {
    out << ",,";
  }
  out << ',' << row.n_removed << ',' << format_metric(row.final_auc_max) << ','
      << csv_escape(row.error);
  return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;

  const TabularDataset dataset = load_csv(cfg.dataset.path, cfg.dataset);
  for (const auto& set : cfg.sensitive_sets) {
    for (const auto& name : set) dataset.sensitive_column(name);  // resolvability check
  }

  const EncodedMatrix scaled = min_max_scale(one_hot_encode(dataset));
  const SplitResult sp = split(scaled, dataset.target, cfg.split_fraction,
                               mix_seed(cfg.seed, kSplitSalt));

  // Sensitive codes restricted to each side of the split, by attribute name.
  std::map<std::string, SensitiveColumn> train_sensitive, eval_sensitive;
  for (const auto& col : dataset.sensitive) {
    train_sensitive.emplace(col.spec.column, col.subset(sp.train_rows));
    eval_sensitive.emplace(col.spec.column, col.subset(sp.eval_rows));
  }

  auto pfr_config_for = [&](const std::vector<std::string>& set, double tau) {
    PfrConfig p;
    p.sensitive_order = set;
    for (const auto& name : set) p.tau_overrides[name] = tau;
    p.auc_slack = cfg.auc_slack;
    p.max_removals = cfg.max_removals;
    p.train_config = cfg.loop_train;
    p.oversample = cfg.oversample;
    p.warm_start = true;
    p.holdout_fraction = cfg.holdout_fraction;
    p.multiclass_mode = cfg.multiclass_mode;
    p.seed = mix_seed(cfg.seed, fnv1a(join_names(set)));
    return p;
  };

  auto train_target_model = [&](const EncodedMatrix& features, std::uint64_t sample_seed) {
    if (cfg.oversample) {
      auto [balanced, balanced_labels] =
          oversample_minority(features, sp.train_labels, sample_seed);
      return train_fair_model(balanced, balanced_labels, cfg.model_train);
    }
    return train_fair_model(features, sp.train_labels, cfg.model_train);
  };

  struct Job {
    std::size_t set_index;
    double tau;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < cfg.sensitive_sets.size(); ++s) {
    for (double tau : cfg.tau_grid) jobs.push_back({s, tau});
  }

  struct JobOutput {
    SweepRow row;
    std::vector<std::pair<std::string, std::string>> files;  // name -> content
  };
  std::vector<JobOutput> outputs(jobs.size());

  auto run_job = [&](const Job& job) {
    const auto started = std::chrono::steady_clock::now();
    const std::vector<std::string>& set = cfg.sensitive_sets[job.set_index];
    const std::string set_name = join_names(set);
    const std::string suffix = set_name + "_" + format_tau_for_filename(job.tau);

    JobOutput out;
    out.row.sensitive_set = set_name;
    out.row.tau = job.tau;

    std::vector<SensitiveColumn> loop_sensitive, check_sensitive;
    for (const auto& name : set) {
      loop_sensitive.push_back(train_sensitive.at(name));
      check_sensitive.push_back(eval_sensitive.at(name));
    }

    try {
      const PfrConfig pcfg = pfr_config_for(set, job.tau);
      MultiResult multi = pfr_multi(sp.train, loop_sensitive, pcfg);

      LogisticModel fair = train_target_model(
          multi.matrix, mix_seed(cfg.seed, fnv1a(set_name), kFairFitSalt));

      EncodedMatrix eval_residual = drop_columns(sp.eval, [&] {
        std::vector<std::string> removed;
        for (const auto& t : multi.traces) {
          for (const auto& id : t.removed_ids()) removed.push_back(id);
        }
        return removed;
      }());

      const SetMetrics metrics =
          evaluate_model(fair, {eval_residual, sp.eval_labels, check_sensitive});
      out.row.accuracy = metrics.accuracy;
      out.row.di_binary = worst_di(metrics.di_binary);
      out.row.di_average = worst_di(metrics.di_average);
      for (const auto& t : multi.traces) {
        out.row.n_removed += static_cast<int>(t.steps.size());
        out.row.final_auc_max = std::max(out.row.final_auc_max, t.final_auc);
      }

      const std::map<std::string, double> audit = recheck(multi.matrix, loop_sensitive, pcfg);

      // Per-attribute reports.
      std::string reports = "[";
      for (std::size_t a = 0; a < set.size(); ++a) {
        FairnessReport report;
        report.sensitive_column = set[a];
        report.tau = job.tau;
        report.accuracy = metrics.accuracy;
        report.disparate_impact_binary = metrics.di_binary[a];
        report.disparate_impact_average = metrics.di_average[a];
        report.removed_columns = [&] {
          for (const auto& t : multi.traces) {
            if (t.sensitive_column == set[a]) {
              std::vector<EncodedColumn> cols;
              for (const auto& step : t.steps) cols.push_back(step.removed_column);
              return cols;
            }
          }
          return std::vector<EncodedColumn>{};
        }();
        report.final_sensitive_auc = audit.at(set[a]);
        if (a) reports += ",";
        reports += report_to_json(report);
      }
      reports += "]\n";

      std::string traces;
      for (const auto& t : multi.traces) traces += trace_to_jsonl(t);

      std::ostringstream rates;
      rates << "sensitive_column,threshold,rate_privileged,rate_unprivileged\n";
      for (std::size_t a = 0; a < set.size(); ++a) {
        for (const auto& r : positive_rate_curve(fair, eval_residual, check_sensitive[a])) {
          rates << set[a] << ',' << format_metric(r.threshold) << ','
                << format_metric(r.rate_privileged) << ',' << format_metric(r.rate_unprivileged)
                << '\n';
        }
      }

      out.files.emplace_back("trace_" + suffix + ".jsonl", std::move(traces));
      out.files.emplace_back("report_" + suffix + ".json", std::move(reports));
      out.files.emplace_back("rates_" + suffix + ".csv", rates.str());
    } catch (const ExhaustedFeaturesError& e) {
      out.row.error = e.what();
      out.row.n_removed = static_cast<int>(e.partial.steps.size());
      out.row.final_auc_max = e.partial.final_auc;
      out.files.emplace_back("trace_" + suffix + ".jsonl", trace_to_jsonl(e.partial));
    } catch (const std::exception& e) {
      out.row.error = e.what();
    }

    out.row.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    return out;
  };

  int workers = cfg.workers;
  if (workers <= 0) {
    if (const char* env = std::getenv("PFR_WORKERS")) workers = std::atoi(env);
  }
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, static_cast<int>(jobs.size()));

  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) outputs[i] = run_job(jobs[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
          outputs[i] = run_job(jobs[i]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // Baseline: one unconstrained model, reported once per sensitive set.
  const auto baseline_started = std::chrono::steady_clock::now();
  const LogisticModel baseline =
      train_target_model(sp.train, mix_seed(cfg.seed, kBaselineSalt));
  const long baseline_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - baseline_started)
                               .count();

  ExperimentResult result;
  for (std::size_t s = 0; s < cfg.sensitive_sets.size(); ++s) {
    const std::vector<std::string>& set = cfg.sensitive_sets[s];
    SweepRow row;
    row.sensitive_set = join_names(set);
    row.baseline = true;
    row.runtime_ms = s == 0 ? baseline_ms : 0;
    std::vector<SensitiveColumn> check_sensitive;
    for (const auto& name : set) check_sensitive.push_back(eval_sensitive.at(name));
    const SetMetrics metrics =
        evaluate_model(baseline, {sp.eval, sp.eval_labels, check_sensitive});
    row.accuracy = metrics.accuracy;
    row.di_binary = worst_di(metrics.di_binary);
    row.di_average = worst_di(metrics.di_average);
    std::vector<SensitiveColumn> train_cols;
    for (const auto& name : set) train_cols.push_back(train_sensitive.at(name));
    const auto initial = recheck(sp.train, train_cols, pfr_config_for(set, 1.0));
    for (const auto& [name, auc] : initial) {
      row.final_auc_max = std::max(row.final_auc_max, auc);
    }
    result.rows.push_back(std::move(row));
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].set_index == s) result.rows.push_back(outputs[j].row);
    }
  }

  fs::create_directories(cfg.output_dir);
  auto write_file = [&](const std::string& name, const std::string& content) {
    const std::string path = (fs::path(cfg.output_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
    result.files_written.push_back(path);
  };

  std::ostringstream sweep;
  sweep << sweep_csv_header() << '\n';
  for (const auto& row : result.rows) sweep << sweep_csv_row(row) << '\n';
  write_file("sweep.csv", sweep.str());

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (const auto& [name, content] : outputs[j].files) write_file(name, content);
  }

  std::ostringstream timings;
  timings << "sensitive_set,tau,baseline,runtime_ms\n";
  for (const auto& row : result.rows) {
    timings << row.sensitive_set << ',';
    if (!row.baseline) timings << format_metric(row.tau);
    timings << ',' << (row.baseline ? 1 : 0) << ',' << row.runtime_ms << '\n';
  }
  write_file("timings.csv", timings.str());

  return result;
}

}  // namespace pfr
