#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "fetch.hpp"
#include "flipguard/attack.hpp"
#include "flipguard/dataset.hpp"
#include "flipguard/defence.hpp"
#include "flipguard/error.hpp"
#include "flipguard/experiments.hpp"
#include "flipguard/io.hpp"
#include "flipguard/plot.hpp"
#include "flipguard/sources.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace flipguard::cli {

namespace {

fs::path data_dir() {
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env != '\0') return env;
  return "data";
}

// Degradation factors (undefended at 20% poisoning over clean) reported for
// the benchmark datasets, printed next to measured ratios.
std::optional<double> reference_factor(const std::string& id) {
  if (id == "breastcancer") return 2.8;
  if (id == "mnist17") return 6.0;
  if (id == "spambase") return 4.5;
  return std::nullopt;
}

void add_train_options(CLI::App* cmd, TrainConfig& train, bool& no_bias, bool& no_shuffle) {
  cmd->add_option("--lr", train.learning_rate, "SGD learning rate")->capture_default_str();
  cmd->add_option("--epochs", train.epochs, "SGD epochs")->capture_default_str();
  cmd->add_flag("--no-bias", no_bias, "Train without a bias term");
  cmd->add_flag("--no-shuffle", no_shuffle, "Visit examples in file order every epoch");
}

void finish_train_config(TrainConfig& train, bool no_bias, bool no_shuffle) {
  train.use_bias = !no_bias;
  train.shuffle = !no_shuffle;
  train.validate();
}

// Standardization fitted on `fit`, applied to `data`; identity when disabled.
LabeledDataset maybe_standardize(const LabeledDataset& fit, const LabeledDataset& data, bool enabled) {
  if (!enabled) return data;
  return apply_standardizer(fit_standardizer(fit), data);
}

// ---------------------------------------------------------------------------

struct FetchArgs {
  std::string id;
  std::string source;
  std::string out;
  bool force = false;
};

std::map<std::string, std::string> read_manifest(const fs::path& path) {
  std::map<std::string, std::string> entries;
  if (!fs::exists(path)) return entries;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto sep = line.find("  ");
    if (sep == std::string::npos) continue;
    entries[line.substr(sep + 2)] = line.substr(0, sep);
  }
  return entries;
}

void write_manifest(const fs::path& path, const std::map<std::string, std::string>& entries) {
  std::string text;
  for (const auto& [file, hash] : entries) text += hash + "  " + file + "\n";
  write_file_atomic(path, text);
}

int cmd_fetch(const FetchArgs& args, std::ostream& out) {
  const auto known = find_dataset(args.id);
  if (!known) throw ConfigError("unknown dataset id '" + args.id + "'");
  const fs::path dir = args.out.empty() ? data_dir() : fs::path(args.out);
  const auto target_name = args.id + ".csv";
  const auto target = dir / target_name;
  const auto manifest_path = dir / "SHA256SUMS";
  auto manifest = read_manifest(manifest_path);

  if (fs::exists(target) && !args.force) {
    const auto actual = sha256_file(target);
    const auto it = manifest.find(target_name);
    if (it != manifest.end()) {
      if (it->second != actual) {
        throw DataError(target.string() + ": checksum mismatch with " + manifest_path.string() +
                        " (use --force to regenerate)");
      }
      out << args.id << ": up to date (" << target.string() << ")\n";
      return kOk;
    }
  }

  fs::path source = args.source;
  if (source.empty()) {
    const auto raw_dir = dir / "raw" / args.id;
    for (const auto& url : known->urls) {
      const auto dest = raw_dir / url.substr(url.find_last_of('/') + 1);
      if (!fs::exists(dest)) {
        out << "downloading " << url << "\n";
        download(url, dest);
      }
    }
    source = args.id == "mnist17" ? raw_dir
                                  : raw_dir / known->urls.front().substr(
                                                  known->urls.front().find_last_of('/') + 1);
  }

  const auto data = convert_source(args.id, source);
  write_canonical_csv(target, data);
  manifest[target_name] = sha256_file(target);
  write_manifest(manifest_path, manifest);

  out << args.id << ": wrote " << data.size() << " rows x " << data.dim() << " features ("
      << data.count(Label::kPositive) << " positive / " << data.count(Label::kNegative)
      << " negative) to " << target.string() << "\n";
  if (data.size() != known->rows || data.dim() != known->dim) {
    out << "note: reference shape is " << known->rows << " x " << known->dim;
    if (!known->note.empty()) out << "; " << known->note;
    out << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct AttackArgs {
  std::string train_path;
  std::string val_path;
  std::optional<std::size_t> budget;
  std::optional<double> fraction;
  std::string strategy = "greedy";
  std::uint64_t seed = 0;
  TrainConfig train;
  bool no_bias = false;
  bool no_shuffle = false;
  bool raw = false;
  std::uint64_t cap = kDefaultBruteForceCap;
  std::size_t jobs = 1;
  std::string out;
};

int cmd_attack(AttackArgs& args, std::ostream& out) {
  finish_train_config(args.train, args.no_bias, args.no_shuffle);
  args.train.seed = args.seed;
  if (args.budget && args.fraction) throw ConfigError("give either -p or --fraction, not both");
  if (!args.budget && !args.fraction) throw ConfigError("an attack budget (-p or --fraction) is required");
  if (args.jobs < 1) throw ConfigError("--jobs must be at least 1");

  const auto train = load_csv(args.train_path);
  const std::size_t p = args.budget ? *args.budget : budget_from_fraction(*args.fraction, train.size());

  AttackResult result;
  if (args.strategy == "random") {
    result = random_flip(train, p, args.seed);
  } else {
    if (args.val_path.empty()) throw ConfigError("--val is required for the " + args.strategy + " strategy");
    const auto val = load_csv(args.val_path);
    // The attacker's model sees standardized features; only labels leave this scope.
    const auto train_std = maybe_standardize(train, train, !args.raw);
    const auto val_std = maybe_standardize(train, val, !args.raw);
    if (args.strategy == "greedy") {
      result = lfa_greedy(train_std, val_std, p, args.train, args.jobs);
    } else {
      result = brute_force_attack(train_std, val_std, p, args.train, args.cap, args.jobs);
    }
    result.poisoned = apply_flips(train, result.flips);
  }

  const fs::path dir = args.out;
  write_canonical_csv(dir / "poisoned.csv", result.poisoned);
  write_file_atomic(dir / "flips.txt", flips_to_text(result.flips));
  write_file_atomic(dir / "trace.csv", trace_to_csv(result.trace));
  out << args.strategy << ": flipped " << result.flips.budget() << " of " << train.size()
      << " labels";
  if (!result.trace.empty()) out << "; final validation loss " << format_double(result.trace.back().validation_loss);
  out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct DefendArgs {
  std::string train_path;
  DefenceConfig defence;
  bool fixpoint = false;
  bool raw = false;
  std::size_t jobs = 1;
  std::string out;
};

int cmd_defend(DefendArgs& args, bool max_passes_given, std::ostream& out) {
  if (args.fixpoint && !max_passes_given) args.defence.max_passes = 100;
  args.defence.validate();
  if (args.jobs < 1) throw ConfigError("--jobs must be at least 1");
  const auto train = load_csv(args.train_path);
  if (train.size() < args.defence.k + 1) {
    throw DataError("dataset of " + std::to_string(train.size()) + " examples is too small for k = " +
                    std::to_string(args.defence.k));
  }
  const auto features = maybe_standardize(train, train, !args.raw);
  const auto cleaned = sanitize(features, args.defence, args.jobs);

  const fs::path dir = args.out;
  write_canonical_csv(dir / "sanitized.csv", train.with_labels(cleaned.data.labels()));
  write_file_atomic(dir / "report.csv", report_to_csv(cleaned.report));
  out << "relabeled " << cleaned.report.total_relabels() << " of " << train.size()
      << " labels in " << cleaned.report.passes_run() << " pass(es)"
      << (cleaned.report.converged ? "" : " (pass limit reached)") << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
  ExperimentConfig config;
  std::string data_path;
  std::string out;
  std::string vary;
  std::vector<double> values;
  bool no_bias = false;
  bool no_shuffle = false;
};

int cmd_experiment(ExperimentArgs& args, std::ostream& out) {
  auto& config = args.config;
  finish_train_config(config.train_config, args.no_bias, args.no_shuffle);
  SweepParameter vary = SweepParameter::kNone;
  if (args.vary == "k") {
    vary = SweepParameter::kK;
  } else if (args.vary == "eta") {
    vary = SweepParameter::kEta;
  } else if (!args.vary.empty()) {
    throw ConfigError("--vary must be 'k' or 'eta'");
  }
  if (vary != SweepParameter::kNone && args.values.empty()) {
    throw ConfigError("--vary needs --values");
  }
  config.validate();

  const fs::path data_path =
      args.data_path.empty() ? data_dir() / (config.dataset_id + ".csv") : fs::path(args.data_path);
  const auto data = load_csv(data_path);

  const auto table = vary == SweepParameter::kNone
                         ? run_poison_sweep(data, config)
                         : sensitivity_sweep(data, config, vary, args.values);
  const auto summary = aggregate(table);

  const fs::path dir = args.out;
  write_file_atomic(dir / "results.csv", table.to_csv());
  write_file_atomic(dir / "summary.csv", summary_to_csv(summary));

  nlohmann::ordered_json meta;
  meta["dataset"] = config.dataset_id;
  meta["rows"] = data.size();
  meta["features"] = data.dim();
  meta["row_budget"] = config.row_budget;
  meta["repetitions"] = config.repetitions;
  meta["n_train"] = config.n_train;
  meta["n_val"] = config.n_val;
  meta["poison_fractions"] = config.poison_fractions;
  meta["learning_rate"] = config.train_config.learning_rate;
  meta["epochs"] = config.train_config.epochs;
  meta["bias"] = config.train_config.use_bias;
  meta["eta"] = config.eta;
  meta["k_grid"] = config.k_grid;
  meta["max_passes"] = config.max_passes;
  meta["master_seed"] = config.master_seed;
  if (vary != SweepParameter::kNone) {
    meta["vary"] = args.vary;
    meta["values"] = args.values;
  }
  if (auto known = find_dataset(config.dataset_id); known && !known->note.empty()) {
    meta["note"] = known->note;
  }

  const double top = config.poison_fractions.back();
  const auto clean = summary_mean(summary, 0.0, {ConditionKind::kClean});
  const auto undefended = summary_mean(summary, top, {ConditionKind::kUndefended});
  const auto defended = summary_mean(summary, top, {ConditionKind::kDefended});
  if (clean && undefended && *clean > 0.0) {
    meta["undefended_over_clean"] = *undefended / *clean;
    out << "mean clean error " << format_double(*clean) << "; undefended at "
        << format_double(top * 100) << "%: " << format_double(*undefended) << " (x"
        << format_double(*undefended / *clean) << ")";
    if (auto ref = reference_factor(config.dataset_id)) {
      meta["reference_factor"] = *ref;
      out << ", reference x" << format_double(*ref);
    }
    out << "\n";
    if (defended) {
      meta["defended_over_clean"] = *defended / *clean;
      out << "defended at " << format_double(top * 100) << "%: " << format_double(*defended)
          << " (x" << format_double(*defended / *clean) << ")\n";
    }
  }
  write_file_atomic(dir / "metadata.json", meta.dump(2) + "\n");
  out << "wrote " << table.size() << " result rows to " << (dir / "results.csv").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct PlotArgs {
  std::string results;
  std::string out;
  std::string title;
};

int cmd_plot(const PlotArgs& args, std::ostream& out) {
  const auto table = ResultsTable::from_csv(read_text_file(args.results));
  if (table.empty()) throw DataError(args.results + ": no result rows");
  fs::path target = args.out;
  if (target.empty()) target = fs::path(args.results).replace_extension(".svg");
  write_file_atomic(target, render_error_plot(aggregate(table), {args.title}));
  out << "wrote " << target.string() << "\n";
  return kOk;
}

std::string option_key(const std::string& arg) {
  if (arg.rfind("--", 0) != 0) return {};
  return arg.substr(2, arg.find('=') - 2);
}

}  // namespace

std::vector<std::string> expand_config_file(const std::vector<std::string>& args) {
  std::vector<std::string> result;
  std::optional<std::string> config_path;
  std::size_t subcommand_pos = 0;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
      continue;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      continue;
    }
    if (i > 0 && subcommand_pos == 0 && args[i].rfind("-", 0) != 0) subcommand_pos = result.size();
    result.push_back(args[i]);
  }
  if (!config_path) return result;

  std::set<std::string> explicit_keys;
  for (const auto& a : result) {
    if (auto key = option_key(a); !key.empty()) explicit_keys.insert(key);
  }
  std::vector<std::string> injected;
  std::istringstream in(read_text_file(*config_path));
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(*config_path + ": line " + std::to_string(number) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (explicit_keys.count(key) != 0) continue;
    injected.push_back("--" + key + "=" + value);
  }
  const auto at = subcommand_pos == 0 ? result.size() : subcommand_pos + 1;
  result.insert(result.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return result;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label flipping attacks and kNN label sanitization for linear hinge-loss classifiers"};
  app.require_subcommand(1);

  FetchArgs fetch;
  auto* fetch_cmd = app.add_subcommand("fetch", "Convert (and if needed download) a benchmark dataset to canonical CSV");
  fetch_cmd->add_option("dataset", fetch.id, "breastcancer | spambase | mnist17")->required();
  fetch_cmd->add_option("--source", fetch.source,
                        "Local raw file (or MNIST directory); skips the download");
  fetch_cmd->add_option("--out", fetch.out, std::string("Output directory (default $") + kDataDirEnv + " or ./data)");
  fetch_cmd->add_flag("--force", fetch.force, "Regenerate even when the checksum manifest matches");

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "Flip training labels to maximize validation hinge loss");
  attack_cmd->add_option("--train", attack.train_path, "Training set CSV (label last)")->required();
  attack_cmd->add_option("--val", attack.val_path, "Validation set CSV used by the attacker");
  attack_cmd->add_option("-p,--budget", attack.budget, "Number of labels to flip");
  attack_cmd->add_option("--fraction", attack.fraction, "Fraction of labels to flip (rounded half up)");
  attack_cmd->add_option("--strategy", attack.strategy, "greedy | random | bruteforce")
      ->check(CLI::IsMember({"greedy", "random", "bruteforce"}))
      ->capture_default_str();
  attack_cmd->add_option("--seed", attack.seed, "Seed for SGD shuffling and random flips")->capture_default_str();
  add_train_options(attack_cmd, attack.train, attack.no_bias, attack.no_shuffle);
  attack_cmd->add_flag("--raw", attack.raw, "Do not standardize features for the attacker's model");
  attack_cmd->add_option("--cap", attack.cap, "Maximum subsets enumerated by bruteforce")->capture_default_str();
  attack_cmd->add_option("--jobs", attack.jobs, "Threads for candidate evaluation")->capture_default_str();
  attack_cmd->add_option("--out", attack.out, "Output directory")->required();

  DefendArgs defend;
  auto* defend_cmd = app.add_subcommand("defend", "Relabel training points by kNN majority vote");
  defend_cmd->add_option("--train", defend.train_path, "Training set CSV (label last)")->required();
  defend_cmd->add_option("-k", defend.defence.k, "Number of neighbours")->capture_default_str();
  defend_cmd->add_option("--eta", defend.defence.eta, "Confidence threshold in [0.5, 1]")->capture_default_str();
  auto* passes_opt = defend_cmd->add_option("--max-passes", defend.defence.max_passes, "Maximum sanitization passes")
                         ->capture_default_str();
  defend_cmd->add_flag("--fixpoint", defend.fixpoint,
                       "Repeat passes until nothing changes (up to --max-passes, default 100)");
  defend_cmd->add_flag("--raw", defend.raw, "Do not standardize features before the neighbour search");
  defend_cmd->add_option("--jobs", defend.jobs, "Threads for the neighbour search")->capture_default_str();
  defend_cmd->add_option("--out", defend.out, "Output directory")->required();

  ExperimentArgs experiment;
  auto& ec = experiment.config;
  auto* exp_cmd = app.add_subcommand("experiment", "Run the poisoning sweep (or a sensitivity sweep) over random splits");
  exp_cmd->add_option("--dataset", ec.dataset_id, "Dataset id used in results and to locate <data dir>/<id>.csv")
      ->capture_default_str();
  exp_cmd->add_option("--data", experiment.data_path, "Canonical dataset CSV (overrides the id lookup)");
  exp_cmd->add_option("--fractions", ec.poison_fractions, "Poison fractions, ascending")
      ->delimiter(',')
      ->capture_default_str();
  exp_cmd->add_option("--repetitions", ec.repetitions, "Random splits")->capture_default_str();
  exp_cmd->add_option("--n-train", ec.n_train, "Training points per split")->capture_default_str();
  exp_cmd->add_option("--n-val", ec.n_val, "Trusted validation points per split")->capture_default_str();
  add_train_options(exp_cmd, ec.train_config, experiment.no_bias, experiment.no_shuffle);
  exp_cmd->add_option("--eta", ec.eta, "Defence confidence threshold")->capture_default_str();
  exp_cmd->add_option("--k-grid", ec.k_grid, "Candidate k values for validation-based selection")
      ->delimiter(',')
      ->capture_default_str();
  exp_cmd->add_option("--max-passes", ec.max_passes, "Sanitization passes (1 = single pass)")->capture_default_str();
  exp_cmd->add_option("--seed", ec.master_seed, "Master seed; split s uses seed + s")->capture_default_str();
  exp_cmd->add_option("--budget", ec.row_budget, "Seeded row subsample of the dataset (0 = all rows)")
      ->capture_default_str();
  exp_cmd->add_option("--vary", experiment.vary, "Sensitivity sweep over 'k' or 'eta'");
  exp_cmd->add_option("--values", experiment.values, "Values for --vary")->delimiter(',');
  exp_cmd->add_option("--sensitivity-k", ec.sensitivity_k, "k held fixed while eta varies")->capture_default_str();
  exp_cmd->add_option("--jobs", ec.jobs, "Splits evaluated concurrently")->capture_default_str();
  exp_cmd->add_option("--out", experiment.out, "Output directory")->required();

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "Render results CSV as an SVG error-vs-poisoning chart");
  plot_cmd->add_option("--results", plot.results, "results.csv from the experiment command")->required();
  plot_cmd->add_option("--out", plot.out, "SVG path (default: results path with .svg)");
  plot_cmd->add_option("--title", plot.title, "Chart title");

  // Consumed by expand_config_file before parsing; declared so --help lists it.
  std::string config_file;
  for (auto* cmd : {fetch_cmd, attack_cmd, defend_cmd, exp_cmd, plot_cmd}) {
    cmd->add_option("--config", config_file, "key=value file supplying defaults for this command's flags");
  }

  try {
    const auto args = expand_config_file(raw_args);
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out, err) == 0 ? kOk : kUsageError;
    }
    if (app.got_subcommand(fetch_cmd)) return cmd_fetch(fetch, out);
    if (app.got_subcommand(attack_cmd)) return cmd_attack(attack, out);
    if (app.got_subcommand(defend_cmd)) return cmd_defend(defend, passes_opt->count() > 0, out);
    if (app.got_subcommand(exp_cmd)) return cmd_experiment(experiment, out);
    if (app.got_subcommand(plot_cmd)) return cmd_plot(plot, out);
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

}  // namespace flipguard::cli
