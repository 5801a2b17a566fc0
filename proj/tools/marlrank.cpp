// marlrank command-line entry point.
//
// Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 data error.

#include <marlrank/config.hpp>
#include <marlrank/serialize.hpp>
#include <marlrank/synthetic.hpp>
#include <marlrank/toy.hpp>
#include <marlrank/trainer.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace marlrank;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kDataError = 3;

constexpr Real kGradTolerance = 1e-4;

// CLI flag -> config key. Every flag takes a string and is applied through
// apply_setting so the config file and the command line share one parser.
const std::vector<std::pair<std::string, std::string>> kRunFlags = {
    {"--data", "data"},         {"--fold", "fold"},
    {"--out", "out"},           {"--norm", "norm"},
    {"--labels", "labels"},     {"--train-file", "train_file"},
    {"--vali-file", "vali_file"}, {"--test-file", "test_file"},
    {"--gamma", "gamma"},       {"--lr", "lr"},
    {"--T", "T"},               {"--T-eval", "T_eval"},
    {"--k", "k"},               {"--cutoff", "cutoff"},
    {"--hidden", "hidden"},     {"--activation", "activation"},
    {"--action-encoding", "action_encoding"},
    {"--pretrain-epochs", "pretrain_epochs"},
    {"--pretrain-lr", "pretrain_lr"},
    {"--epochs", "epochs"},     {"--patience", "patience"},
    {"--schedule", "schedule"}, {"--update", "update"},
    {"--reward-scores", "reward_scores"},
    {"--seed", "seed"},
};

struct RunOptions {
  std::string config_file;
  std::map<std::string, std::string> flags;
  std::vector<std::string> sets;
};

void add_run_options(CLI::App* cmd, RunOptions& opts) {
  cmd->add_option("--config", opts.config_file, "key = value config file");
  for (const auto& [flag, key] : kRunFlags) {
    cmd->add_option(flag, opts.flags[key], "overrides config key '" + key + "'");
  }
  cmd->add_option("--set", opts.sets, "generic key=value override (repeatable)");
}

RunConfig resolve(const RunOptions& opts, CLI::App* cmd) {
  RunConfig config;
  if (!opts.config_file.empty()) apply_settings(config, read_config_file(opts.config_file));
  if (const char* env = std::getenv(kDataRootEnv); env != nullptr && *env != '\0') {
    config.data_root = env;
  }
  for (const auto& [flag, key] : kRunFlags) {
    if (cmd->count(flag) > 0) apply_setting(config, key, opts.flags.at(key));
  }
  for (const auto& kv : opts.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void require_data_root(const RunConfig& config) {
  if (config.data_root.empty()) {
    throw ConfigError("missing dataset path (use --data, the config key 'data' or $" +
                      std::string(kDataRootEnv) + ")");
  }
  if (!fs::is_directory(config.data_root)) {
    throw ConfigError("dataset path " + config.data_root.string() + " does not exist");
  }
}

letor::FoldSplit load_normalized_fold(const RunConfig& config, int fold) {
  auto split = letor::load_fold(config.layout(), fold);
  split.train = letor::normalize_features(split.train, config.normalization);
  split.validation = letor::normalize_features(split.validation, config.normalization);
  split.test = letor::normalize_features(split.test, config.normalization);
  return split;
}

void print_ndcg(std::ostream& out, const std::string& label, const metrics::NdcgSet& set) {
  out << std::left << std::setw(8) << label << std::right << std::fixed << std::setprecision(4);
  for (Real v : set) out << std::setw(10) << v;
  out << std::defaultfloat << '\n';
}

// ---------------------------------------------------------------------------

int cmd_toy(int steps, bool exact, const std::string& csv_path) {
  const auto rows = toy::run_toy(steps, exact ? toy::Arithmetic::exact : toy::Arithmetic::rounded);
  toy::print_table(std::cout, rows);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw Error("cannot write " + csv_path);
    toy::write_csv(out, rows);
  }
  bool ok = toy::matches_reference(rows);
  for (const auto& row : rows) {
    if (row.step >= 1 && row.step <= 3 && std::abs(row.ndcg_at_3 - 1.0) > 1e-12) ok = false;
  }
  std::cout << "step-0 NDCG@3 uses the standard formula (" << std::setprecision(4) << rows.front().ndcg_at_3
            << "); the reference table prints 0.3\n";
  std::cout << (ok ? "MATCH" : "MISMATCH") << '\n';
  return ok ? kOk : kCheckFailed;
}

int cmd_synth(const fs::path& out, synthetic::SyntheticSpec spec, int folds) {
  const auto ds = synthetic::generate(spec);
  synthetic::write_fold_layout(out, ds, folds);
  std::cout << "wrote " << folds << " folds (" << ds.groups.size() << " queries, " << ds.num_documents()
            << " documents, F=" << ds.feature_dim << ") to " << out.string() << '\n';
  return kOk;
}

int cmd_prepare(const RunConfig& config) {
  require_data_root(config);
  fs::create_directories(config.out_dir);
  for (int fold : config.selected_folds()) {
    const auto split = load_normalized_fold(config, fold);
    const auto dir = config.out_dir / ("Fold" + std::to_string(fold));
    fs::create_directories(dir);
    const std::pair<const letor::Dataset*, const std::string*> parts[] = {
        {&split.train, &config.train_file}, {&split.validation, &config.validation_file},
        {&split.test, &config.test_file}};
    for (const auto& [ds, name] : parts) {
      std::ofstream out(dir / *name);
      letor::write_dataset(out, *ds);
    }
    std::cout << "Fold" << fold << ": train " << split.train.groups.size() << " queries, vali "
              << split.validation.groups.size() << ", test " << split.test.groups.size()
              << ", F=" << split.train.feature_dim << '\n';
  }
  write_file(config.out_dir / "config.txt", render_config(config));
  return kOk;
}

int cmd_train(const RunConfig& config) {
  require_data_root(config);
  fs::create_directories(config.out_dir);
  write_file(config.out_dir / "config.txt", render_config(config));
  std::ofstream metrics_file(config.out_dir / "metrics.csv");
  trainer::MetricsCsv csv(metrics_file);

  for (int fold : config.selected_folds()) {
    const auto split = load_normalized_fold(config, fold);
    const auto result = trainer::train_fold(split, config.train, &csv);
    const auto dir = config.out_dir / ("fold" + std::to_string(fold));
    fs::create_directories(dir);
    save_params(dir / "model.bin", result.best);
    std::cout << "fold " << fold << ": pretrain accuracy " << std::fixed << std::setprecision(4)
              << result.pretrain_accuracy << ", best vali NDCG@10 " << result.best_validation_ndcg10
              << " at epoch " << result.best_epoch << std::defaultfloat << " -> " << (dir / "model.bin").string()
              << '\n';
  }
  return kOk;
}

fs::path checkpoint_for(const fs::path& checkpoint, int fold) {
  if (fs::is_directory(checkpoint)) return checkpoint / ("fold" + std::to_string(fold)) / "model.bin";
  return checkpoint;
}

int cmd_evaluate(const RunConfig& config, const fs::path& checkpoint, const std::string& input) {
  fs::create_directories(config.out_dir);
  write_file(config.out_dir / "eval_config.txt", render_config(config));
  std::ofstream trace_file(config.out_dir / "trace.csv");
  trainer::MetricsCsv csv(trace_file);
  std::ofstream summary(config.out_dir / "summary.csv");
  summary << "fold,ndcg@1,ndcg@3,ndcg@5,ndcg@10\n";
  auto summary_row = [&](const std::string& fold, const metrics::NdcgSet& set) {
    summary << fold;
    for (Real v : set) summary << ',' << trainer::format_value(v);
    summary << '\n';
    print_ndcg(std::cout, fold, set);
  };

  std::cout << std::left << std::setw(8) << "fold" << std::right;
  for (std::size_t c = 0; c < metrics::kReportedCutoffs.size(); ++c) {
    std::cout << std::setw(10) << trainer::ndcg_metric_name(c);
  }
  std::cout << '\n';

  const auto steps = config.train.eval_steps;
  if (!input.empty()) {
    const auto params = load_params(checkpoint);
    const auto ds = letor::normalize_features(letor::load_dataset(fs::path(input), config.labels),
                                              config.normalization);
    const auto result = policy::evaluate(params, ds, steps);
    trainer::write_trace(csv, "input", 0, "test", result);
    summary_row("input", result.final());
    return kOk;
  }

  require_data_root(config);
  metrics::NdcgSet mean{};
  const auto folds = config.selected_folds();
  for (int fold : folds) {
    const auto params = load_params(checkpoint_for(checkpoint, fold));
    const auto split = load_normalized_fold(config, fold);
    const auto result = policy::evaluate(params, split.test, steps);
    trainer::write_trace(csv, std::to_string(fold), 0, "test", result);
    summary_row(std::to_string(fold), result.final());
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += result.final()[c] / static_cast<Real>(folds.size());
  }
  if (folds.size() > 1) summary_row("mean", mean);
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, int seeds, bool corrupt) {
  Real policy_err = 0.0;
  Real reinforce_err = 0.0;
  for (int s = 0; s < seeds; ++s) {
    policy_err = std::max(policy_err, trainer::policy_grad_check(seed + s, corrupt));
    reinforce_err = std::max(reinforce_err, trainer::end_to_end_grad_check(seed + s, corrupt));
  }
  const Real worst = std::max(policy_err, reinforce_err);
  std::cout << std::scientific << std::setprecision(6) << "policy_max_rel_err=" << policy_err << '\n'
            << "reinforce_max_rel_err=" << reinforce_err << '\n'
            << "max_rel_err=" << worst << '\n';
  const bool ok = worst < kGradTolerance;
  std::cout << (ok ? "PASS" : "FAIL") << " (threshold " << kGradTolerance << ")\n";
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"marlrank: multi-agent reinforced learning to rank"};
  app.require_subcommand(1);

  auto* toy_cmd = app.add_subcommand("toy", "reproduce the six-document interaction example");
  int toy_steps = 3;
  std::string toy_csv;
  toy_cmd->add_option("--steps", toy_steps, "interaction steps")->check(CLI::NonNegativeNumber);
  bool toy_exact = false;
  toy_cmd->add_option("--csv", toy_csv, "also write the table as CSV");
  toy_cmd->add_flag("--exact", toy_exact, "keep full precision instead of rounding each step to 2 decimals");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset in LETOR fold layout");
  synthetic::SyntheticSpec spec;
  std::string synth_out;
  int synth_folds = 5;
  synth_cmd->add_option("--out", synth_out, "output root")->required();
  synth_cmd->add_option("--queries", spec.queries)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--docs", spec.docs_per_query)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--features", spec.features)->check(CLI::Range(2, 100000));
  synth_cmd->add_option("--noise", spec.noise)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", spec.seed);
  synth_cmd->add_option("--folds", synth_folds)->check(CLI::Range(3, 100));

  RunOptions prepare_opts, train_opts, eval_opts;
  auto* prepare_cmd = app.add_subcommand("prepare", "load, validate and normalize LETOR folds");
  add_run_options(prepare_cmd, prepare_opts);
  auto* train_cmd = app.add_subcommand("train", "pre-train and REINFORCE-train per fold");
  add_run_options(train_cmd, train_opts);
  auto* eval_cmd = app.add_subcommand("evaluate", "greedy evaluation with per-step NDCG traces");
  add_run_options(eval_cmd, eval_opts);
  std::string checkpoint;
  std::string eval_input;
  eval_cmd->add_option("--checkpoint", checkpoint, "model file, or a directory holding fold<K>/model.bin")
      ->required();
  eval_cmd->add_option("--input", eval_input, "evaluate a single LETOR file instead of fold test sets");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::uint64_t grad_seed = 0;
  int grad_seeds = 20;
  bool grad_corrupt = false;
  grad_cmd->add_option("--seed", grad_seed, "first seed");
  grad_cmd->add_option("--seeds", grad_seeds, "number of seeds")->check(CLI::PositiveNumber);
  grad_cmd->add_flag("--corrupt", grad_corrupt, "perturb one analytic gradient (test hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*toy_cmd) return cmd_toy(toy_steps, toy_exact, toy_csv);
    if (*synth_cmd) return cmd_synth(synth_out, spec, synth_folds);
    if (*prepare_cmd) return cmd_prepare(resolve(prepare_opts, prepare_cmd));
    if (*train_cmd) return cmd_train(resolve(train_opts, train_cmd));
    if (*eval_cmd) return cmd_evaluate(resolve(eval_opts, eval_cmd), checkpoint, eval_input);
    if (*grad_cmd) return cmd_gradcheck(grad_seed, grad_seeds, grad_corrupt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}
