#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfr/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitExhausted = 3;

struct CommonOptions {
  std::string dataset_config;
  std::uint64_t seed = 0;
  bool no_oversample = false;
  std::string multiclass_mode = "privileged_vs_rest";
};

pfr::MulticlassMode parse_mode(const std::string& mode) {
  if (mode == "privileged_vs_rest") return pfr::MulticlassMode::privileged_vs_rest;
  if (mode == "one_vs_all") return pfr::MulticlassMode::one_vs_all;
  throw pfr::ConfigError("multiclass mode must be privileged_vs_rest or one_vs_all");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pfr::ConfigError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path) {
  const pfr::ExperimentConfig cfg = pfr::ExperimentConfig::from_json_file(config_path);
  const pfr::ExperimentResult result = pfr::run_experiment(cfg);

  std::cout << pfr::sweep_csv_header() << "\n";
  for (const auto& row : result.rows) std::cout << pfr::sweep_csv_row(row) << "\n";
  std::cerr << "wrote " << result.files_written.size() << " files to " << cfg.output_dir << "\n";

  for (const auto& row : result.rows) {
    if (!row.error.empty()) {
      std::cerr << "grid point " << row.sensitive_set << " tau "
                << pfr::format_metric(row.tau) << " failed: " << row.error << "\n";
      return kExitRuntime;
    }
  }
  return kExitOk;
}

int cmd_pfr(const CommonOptions& common, const std::vector<std::string>& sensitive, double tau,
            bool tau_given, int max_removals, double slack, const std::string& out_path,
            bool show_table, bool no_recheck) {
  const pfr::DatasetConfig dcfg = pfr::DatasetConfig::from_json_file(common.dataset_config);
  const pfr::TabularDataset dataset = pfr::load_csv(dcfg.path, dcfg);
  const pfr::EncodedMatrix scaled = pfr::min_max_scale(pfr::one_hot_encode(dataset));

  pfr::PfrConfig pcfg;
  pcfg.sensitive_order = sensitive.empty() ? [&] {
    std::vector<std::string> all;
    for (const auto& col : dataset.sensitive) all.push_back(col.spec.column);
    return all;
  }() : sensitive;
  if (tau_given) {
    for (const auto& name : pcfg.sensitive_order) pcfg.tau_overrides[name] = tau;
  }
  pcfg.auc_slack = slack;
  pcfg.max_removals = max_removals;
  pcfg.oversample = !common.no_oversample;
  pcfg.multiclass_mode = parse_mode(common.multiclass_mode);
  pcfg.seed = common.seed;

  auto emit_traces = [&](const std::vector<pfr::RemovalTrace>& traces) {
    std::string text;
    for (const auto& t : traces) text += pfr::trace_to_jsonl(t);
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw pfr::Error("cannot write " + out_path);
      out << text;
    }
  };

  pfr::MultiResult result;
  try {
    result = pfr::pfr_multi(scaled, dataset, pcfg);
  } catch (const pfr::ExhaustedFeaturesError& e) {
    std::cerr << "error: " << e.what() << "\n";
    emit_traces({e.partial});
    return kExitExhausted;
  }

  for (const auto& t : result.traces) {
    std::cerr << t.sensitive_column << ": tau " << pfr::format_metric(t.tau) << ", removed "
              << t.steps.size() << ", final auc " << pfr::format_metric(t.final_auc) << "\n";
  }
  if (show_table) std::cerr << pfr::emit_table_report(result.traces);
  emit_traces(result.traces);

  if (!no_recheck) {
    std::vector<pfr::SensitiveColumn> cols;
    for (const auto& name : pcfg.sensitive_order) {
      cols.push_back(dataset.sensitive_column(name));
    }
    const auto audit = pfr::recheck(result.matrix, cols, pcfg);
    bool violated = false;
    for (const auto& t : result.traces) {
      const double auc = audit.at(t.sensitive_column);
      const bool ok = auc <= t.tau + pcfg.auc_slack;
      std::cerr << "recheck " << t.sensitive_column << ": auc " << pfr::format_metric(auc)
                << (ok ? " within " : " EXCEEDS ") << "tau " << pfr::format_metric(t.tau)
                << " + slack " << pfr::format_metric(pcfg.auc_slack) << "\n";
      violated = violated || !ok;
    }
    if (violated) return kExitRuntime;
  }
  return kExitOk;
}

int cmd_audit(const CommonOptions& common, const std::string& trace_path, double slack) {
  const pfr::DatasetConfig dcfg = pfr::DatasetConfig::from_json_file(common.dataset_config);
  const pfr::TabularDataset dataset = pfr::load_csv(dcfg.path, dcfg);
  const pfr::EncodedMatrix scaled = pfr::min_max_scale(pfr::one_hot_encode(dataset));

  const std::vector<pfr::RemovalTrace> traces = pfr::traces_from_jsonl(read_file(trace_path));
  if (traces.empty()) throw pfr::ValidationError("trace file holds no traces");

  // Replay the removals and confirm each trace's final column set.
  pfr::EncodedMatrix current = scaled;
  for (const auto& t : traces) {
    current = pfr::drop_columns(current, t.removed_ids());
    const auto ids = current.column_ids();
    std::vector<std::string> expected;
    for (const auto& c : t.final_columns) expected.push_back(c.id);
    if (ids != expected) {
      throw pfr::ValidationError("replaying trace for " + t.sensitive_column +
                                 " does not reproduce its final column set");
    }
  }
  std::cerr << "replay ok: " << current.n_cols() << " columns remain\n";

  pfr::PfrConfig pcfg;
  pcfg.oversample = !common.no_oversample;
  pcfg.multiclass_mode = parse_mode(common.multiclass_mode);
  pcfg.seed = common.seed;
  std::vector<pfr::SensitiveColumn> cols;
  for (const auto& t : traces) cols.push_back(dataset.sensitive_column(t.sensitive_column));
  const auto audit = pfr::recheck(current, cols, pcfg);

  bool violated = false;
  for (const auto& t : traces) {
    const double auc = audit.at(t.sensitive_column);
    const bool ok = t.truncated || auc <= t.tau + slack;
    std::cout << t.sensitive_column << ": auc " << pfr::format_metric(auc) << " vs tau "
              << pfr::format_metric(t.tau) << " + slack " << pfr::format_metric(slack) << " -> "
              << (ok ? "ok" : "VIOLATION") << (t.truncated ? " (truncated trace)" : "") << "\n";
    violated = violated || !ok;
  }
  return violated ? kExitRuntime : kExitOk;
}

int cmd_tau(const CommonOptions& common, const std::vector<std::string>& sensitive) {
  const pfr::DatasetConfig dcfg = pfr::DatasetConfig::from_json_file(common.dataset_config);
  const pfr::TabularDataset dataset = pfr::load_csv(dcfg.path, dcfg);
  const pfr::MulticlassMode mode = parse_mode(common.multiclass_mode);

  std::vector<std::string> names = sensitive;
  if (names.empty()) {
    for (const auto& col : dataset.sensitive) names.push_back(col.spec.column);
  }
  for (const auto& name : names) {
    const auto& col = dataset.sensitive_column(name);
    std::cout << name << " " << pfr::format_metric(pfr::default_tau_for(col, mode)) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detects and removes latent proxy features for sensitive attributes, "
               "then trains and evaluates a fair classifier"};
  app.require_subcommand(1);

  std::string experiment_config;
  auto* run = app.add_subcommand("run", "Run a full tau-sweep experiment from a config file");
  run->add_option("config", experiment_config, "experiment config (JSON)")->required();

  CommonOptions common;
  std::vector<std::string> sensitive;
  double tau = 0.0;
  int max_removals = -1;
  double slack = 0.01;
  std::string out_path;
  bool show_table = false, no_recheck = false;

  auto add_common = [&](CLI::App* cmd, bool with_dataset_arg = true) {
    if (with_dataset_arg) {
      cmd->add_option("dataset-config", common.dataset_config, "dataset config (JSON)")
          ->required();
    }
    cmd->add_option("--seed", common.seed, "master random seed");
    cmd->add_flag("--no-oversample", common.no_oversample, "train on raw class balance");
    cmd->add_option("--mode", common.multiclass_mode,
                    "multi-class handling: privileged_vs_rest or one_vs_all");
  };

  auto* loop = app.add_subcommand(
      "pfr", "Run the proxy-removal loop and print the removal trace as JSON lines");
  add_common(loop);
  loop->add_option("--sensitive", sensitive, "sensitive column (repeatable; default: all)");
  auto* tau_opt = loop->add_option("--tau", tau, "AUC stopping threshold in (0.5, 1]");
  loop->add_option("--max-removals", max_removals, "removal cap (-1: all but one column)");
  loop->add_option("--slack", slack, "recheck tolerance above tau");
  loop->add_option("--out", out_path, "write the trace here instead of stdout");
  loop->add_flag("--table", show_table, "also print removed features grouped by attribute");
  loop->add_flag("--no-recheck", no_recheck, "skip the fresh-predictor audit after the loop");

  std::string trace_path;
  auto* audit = app.add_subcommand(
      "audit", "Replay a removal trace and retrain fresh sensitive predictors on the residual");
  add_common(audit);
  audit->add_option("trace-file", trace_path, "trace file (JSON lines)")->required();
  audit->add_option("--slack", slack, "allowed AUC excess above each trace's tau");

  auto* tau_cmd = app.add_subcommand("tau", "Print the default AUC threshold per"
                                            " sensitive column");
  add_common(tau_cmd);
  tau_cmd->add_option("--sensitive", sensitive, "sensitive column (repeatable; default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(experiment_config);
    if (loop->parsed()) {
      return cmd_pfr(common, sensitive, tau, tau_opt->count() > 0, max_removals, slack, out_path,
                     show_table, no_recheck);
    }
    if (audit->parsed()) return cmd_audit(common, trace_path, slack);
    if (tau_cmd->parsed()) return cmd_tau(common, sensitive);
  } catch (const pfr::ExhaustedFeaturesError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitExhausted;
  } catch (const pfr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pfr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
