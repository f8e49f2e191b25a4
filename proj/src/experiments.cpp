#include "flipguard/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "flipguard/attack.hpp"
#include "flipguard/error.hpp"
#include "flipguard/parallel.hpp"

namespace flipguard {

// ---------------------------------------------------------------------------
// Condition

std::string Condition::name() const {
  std::string base;
  switch (kind) {
    case ConditionKind::kClean: base = "clean"; break;
    case ConditionKind::kUndefended: base = "undefended"; break;
    case ConditionKind::kDefended: base = "defended"; break;
  }
  switch (swept) {
    case SweepParameter::kNone: return base;
    case SweepParameter::kK: return base + "_k=" + format_double(value);
    case SweepParameter::kEta: return base + "_eta=" + format_double(value);
  }
  return base;
}

namespace {

double parse_double_field(std::string_view text, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw DataError("bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::size_t parse_count_field(std::string_view text, std::string_view what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

Condition Condition::parse(std::string_view text) {
  Condition c;
  auto base = text.substr(0, text.find('_'));
  if (base == "clean") {
    c.kind = ConditionKind::kClean;
  } else if (base == "undefended") {
    c.kind = ConditionKind::kUndefended;
  } else if (base == "defended") {
    c.kind = ConditionKind::kDefended;
  } else {
    throw DataError("unknown condition '" + std::string(text) + "'");
  }
  if (base.size() == text.size()) return c;
  auto tag = text.substr(base.size() + 1);
  const auto eq = tag.find('=');
  if (eq == std::string_view::npos) throw DataError("bad condition tag '" + std::string(text) + "'");
  const auto param = tag.substr(0, eq);
  if (param == "k") {
    c.swept = SweepParameter::kK;
  } else if (param == "eta") {
    c.swept = SweepParameter::kEta;
  } else {
    throw DataError("bad condition tag '" + std::string(text) + "'");
  }
  c.value = parse_double_field(tag.substr(eq + 1), "condition value");
  return c;
}

bool operator<(const Condition& a, const Condition& b) {
  return std::tie(a.kind, a.swept, a.value) < std::tie(b.kind, b.swept, b.value);
}

// ---------------------------------------------------------------------------
// ResultsTable

void ResultsTable::add(ResultRow row) {
  for (double e : {row.test_error, row.validation_error}) {
    if (!(e >= 0.0 && e <= 1.0)) throw InvariantError("error rate outside [0, 1]");
  }
  if (find(row.dataset, row.fraction, row.split_id, row.condition) != nullptr) {
    throw InvariantError("duplicate results key (" + row.dataset + ", " +
                         format_double(row.fraction) + ", " + std::to_string(row.split_id) +
                         ", " + row.condition.name() + ")");
  }
  rows_.push_back(std::move(row));
}

void ResultsTable::append(const ResultsTable& other) {
  for (const auto& row : other.rows_) add(row);
}

const ResultRow* ResultsTable::find(std::string_view dataset, double fraction,
                                    std::size_t split_id, const Condition& condition) const {
  for (const auto& row : rows_) {
    if (row.dataset == dataset && row.fraction == fraction && row.split_id == split_id &&
        row.condition == condition) {
      return &row;
    }
  }
  return nullptr;
}

std::string ResultsTable::to_csv() const {
  std::string out(kHeader);
  out += '\n';
  for (const auto& r : rows_) {
    out += r.dataset + "," + format_double(r.fraction) + "," + std::to_string(r.split_id) + "," +
           r.condition.name() + ",";
    if (r.k_selected) out += std::to_string(*r.k_selected);
    out += ",";
    if (r.eta) out += format_double(*r.eta);
    out += "," + format_double(r.test_error) + "," + format_double(r.validation_error) + "\n";
  }
  return out;
}

ResultsTable ResultsTable::from_csv(std::string_view text) {
  ResultsTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError("results csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    throw DataError("results csv: header '" + line + "' does not match '" + std::string(kHeader) +
                    "'");
  }
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 8) {
      throw DataError("results csv: row " + std::to_string(number) + " has " +
                      std::to_string(cells.size()) + " cells, expected 8");
    }
    try {
      ResultRow row;
      row.dataset = std::string(cells[0]);
      row.fraction = parse_double_field(cells[1], "fraction");
      row.split_id = parse_count_field(cells[2], "split_id");
      row.condition = Condition::parse(cells[3]);
      if (!cells[4].empty()) row.k_selected = parse_count_field(cells[4], "k_selected");
      if (!cells[5].empty()) row.eta = parse_double_field(cells[5], "eta");
      row.test_error = parse_double_field(cells[6], "test_error");
      row.validation_error = parse_double_field(cells[7], "validation_error");
      table.add(std::move(row));
    } catch (const std::exception& e) {
      throw DataError("results csv: row " + std::to_string(number) + ": " + e.what());
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Aggregation

std::vector<SummaryRow> aggregate(const ResultsTable& table) {
  if (table.empty()) throw DataError("aggregate: empty results table");
  using Key = std::tuple<std::string, Condition, double>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : table.rows()) {
    groups[{r.dataset, r.condition, r.fraction}].push_back(r.test_error);
  }
  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (const auto& [key, errors] : groups) {
    const auto n = static_cast<double>(errors.size());
    double mean = 0.0;
    for (double e : errors) mean += e;
    mean /= n;
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    out.push_back({std::get<0>(key), std::get<2>(key), std::get<1>(key), mean,
                   std::sqrt(var / n), errors.size()});
  }
  return out;
}

std::string summary_to_csv(const std::vector<SummaryRow>& summary) {
  std::string out = "dataset,fraction,condition,mean_error,std_error,n_splits\n";
  for (const auto& s : summary) {
    out += s.dataset + "," + format_double(s.fraction) + "," + s.condition.name() + "," +
           format_double(s.mean_error) + "," + format_double(s.std_error) + "," +
           std::to_string(s.n_splits) + "\n";
  }
  return out;
}

std::optional<double> summary_mean(const std::vector<SummaryRow>& summary, double fraction,
                                   const Condition& condition) {
  for (const auto& s : summary) {
    if (s.fraction == fraction && s.condition == condition) return s.mean_error;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Protocol

void ExperimentConfig::validate() const {
  if (poison_fractions.empty()) throw ConfigError("at least one poison fraction is required");
  for (std::size_t i = 0; i < poison_fractions.size(); ++i) {
    const double f = poison_fractions[i];
    if (!(f >= 0.0 && f < 1.0)) throw ConfigError("poison fractions must lie in [0, 1)");
    if (i > 0 && !(f > poison_fractions[i - 1])) {
      throw ConfigError("poison fractions must be strictly ascending");
    }
  }
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (n_train < 2) throw ConfigError("n_train must be at least 2");
  if (n_val < 1) throw ConfigError("n_val must be at least 1");
  train_config.validate();
  if (k_grid.empty()) throw ConfigError("k grid must not be empty");
  for (std::size_t k : k_grid) {
    DefenceConfig{k, eta, max_passes}.validate(n_train);
  }
  DefenceConfig{sensitivity_k, eta, max_passes}.validate(n_train);
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
}

KSelection select_k(const LabeledDataset& poisoned_train, const LabeledDataset& trusted_validation,
                    const std::vector<std::size_t>& k_grid, double eta,
                    const TrainConfig& train_config, std::size_t max_passes) {
  if (k_grid.empty()) throw ConfigError("select_k: empty k grid");
  KSelection best{0, 2.0};
  for (std::size_t k : k_grid) {
    const DefenceConfig defence{k, eta, max_passes};
    defence.validate(poisoned_train.size());
    const auto cleaned = sanitize(poisoned_train, defence);
    const double err = zero_one_error(train_sgd(cleaned.data, train_config), trusted_validation);
    if (err < best.validation_error || (err == best.validation_error && k < best.k)) {
      best = {k, err};
    }
  }
  return best;
}

namespace {

// Everything about one split that does not depend on the defence parameters.
struct PreparedSplit {
  std::size_t split_id = 0;
  DataSplit split;
  TrainConfig train_config;
  std::vector<std::size_t> greedy_order;  // committed flip indices, in round order
};

PreparedSplit prepare_split(const LabeledDataset& pool, const ExperimentConfig& config,
                            std::size_t split_id) {
  PreparedSplit ps;
  ps.split_id = split_id;
  const std::uint64_t seed = config.master_seed + split_id;
  auto raw = random_split(pool, config.n_train, config.n_val, seed);
  const auto standardizer = fit_standardizer(raw.train);
  ps.split = std::move(raw);
  ps.split.train = apply_standardizer(standardizer, ps.split.train);
  ps.split.validation = apply_standardizer(standardizer, ps.split.validation);
  ps.split.test = apply_standardizer(standardizer, ps.split.test);
  ps.train_config = config.train_config;
  ps.train_config.seed = seed;

  // Greedy rounds are deterministic, so the attack for a smaller budget is a
  // prefix of the attack for the largest budget.
  const std::size_t p_max = budget_from_fraction(config.poison_fractions.back(), config.n_train);
  const auto attack = lfa_greedy(ps.split.train, ps.split.validation, p_max, ps.train_config);
  for (const auto& step : attack.trace) ps.greedy_order.push_back(step.flipped_index);
  return ps;
}

LabeledDataset poisoned_at(const PreparedSplit& ps, std::size_t p) {
  const std::vector<std::size_t> prefix(ps.greedy_order.begin(),
                                        ps.greedy_order.begin() + static_cast<std::ptrdiff_t>(p));
  return apply_flips(ps.split.train, FlipVector::from_indices(ps.split.train.size(), prefix));
}

ResultRow evaluate(const PreparedSplit& ps, const std::string& dataset, double fraction,
                   Condition condition, const LabeledDataset& train) {
  const auto model = train_sgd(train, ps.train_config);
  ResultRow row;
  row.dataset = dataset;
  row.fraction = fraction;
  row.split_id = ps.split_id;
  row.condition = condition;
  row.test_error = zero_one_error(model, ps.split.test);
  row.validation_error = zero_one_error(model, ps.split.validation);
  return row;
}

ResultRow evaluate_defended(const PreparedSplit& ps, const std::string& dataset, double fraction,
                            Condition condition, const LabeledDataset& poisoned,
                            const DefenceConfig& defence) {
  const auto cleaned = sanitize(poisoned, defence);
  auto row = evaluate(ps, dataset, fraction, condition, cleaned.data);
  row.k_selected = defence.k;
  row.eta = defence.eta;
  row.relabeled = cleaned.report.total_relabels();
  return row;
}

template <typename DefendFn>
ResultsTable run_protocol(const LabeledDataset& data, const ExperimentConfig& config,
                          DefendFn&& defend) {
  config.validate();
  const auto pool = config.row_budget > 0 ? subsample(data, config.row_budget, config.master_seed)
                                          : data;
  std::vector<std::vector<ResultRow>> per_split(config.repetitions);
  parallel_for(config.repetitions, config.jobs, [&](std::size_t s) {
    const auto ps = prepare_split(pool, config, s + 1);
    auto& rows = per_split[s];
    rows.push_back(evaluate(ps, config.dataset_id, 0.0, {ConditionKind::kClean}, ps.split.train));
    for (double f : config.poison_fractions) {
      const auto poisoned = poisoned_at(ps, budget_from_fraction(f, config.n_train));
      rows.push_back(evaluate(ps, config.dataset_id, f, {ConditionKind::kUndefended}, poisoned));
      defend(ps, f, poisoned, rows);
    }
  });
  ResultsTable table;
  for (auto& rows : per_split) {
    for (auto& row : rows) table.add(std::move(row));
  }
  return table;
}

}  // namespace

ResultsTable run_poison_sweep(const LabeledDataset& data, const ExperimentConfig& config) {
  return run_protocol(data, config, [&](const PreparedSplit& ps, double f,
                                        const LabeledDataset& poisoned,
                                        std::vector<ResultRow>& rows) {
    const auto chosen = select_k(poisoned, ps.split.validation, config.k_grid, config.eta,
                                 ps.train_config, config.max_passes);
    rows.push_back(evaluate_defended(ps, config.dataset_id, f, {ConditionKind::kDefended},
                                     poisoned, {chosen.k, config.eta, config.max_passes}));
  });
}

ResultsTable sensitivity_sweep(const LabeledDataset& data, const ExperimentConfig& config,
                               SweepParameter vary, const std::vector<double>& values) {
  if (vary == SweepParameter::kNone) throw ConfigError("sensitivity sweep needs k or eta to vary");
  if (values.empty()) throw ConfigError("sensitivity sweep needs at least one value");
  std::vector<DefenceConfig> defences;
  for (double v : values) {
    DefenceConfig d{config.sensitivity_k, config.eta, config.max_passes};
    if (vary == SweepParameter::kK) {
      if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("k values must be positive integers");
      d.k = static_cast<std::size_t>(v);
    } else {
      d.eta = v;
    }
    d.validate(config.n_train);
    defences.push_back(d);
  }
  return run_protocol(data, config, [&](const PreparedSplit& ps, double f,
                                        const LabeledDataset& poisoned,
                                        std::vector<ResultRow>& rows) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Condition condition{ConditionKind::kDefended, vary, values[i]};
      rows.push_back(evaluate_defended(ps, config.dataset_id, f, condition, poisoned, defences[i]));
    }
  });
}

}  // namespace flipguard
