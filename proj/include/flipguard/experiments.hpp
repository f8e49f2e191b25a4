#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flipguard/dataset.hpp"
#include "flipguard/defence.hpp"
#include "flipguard/linear_model.hpp"

namespace flipguard {

enum class ConditionKind { kClean, kUndefended, kDefended };

/// Which defence parameter a sensitivity sweep holds at a fixed value.
enum class SweepParameter { kNone, kK, kEta };

/// Experimental condition of a results row. Sensitivity sweeps tag their
/// defended rows with the swept parameter, e.g. "defended_k=3", so every
/// (dataset, fraction, split, condition) key stays unique.
struct Condition {
  ConditionKind kind = ConditionKind::kClean;
  SweepParameter swept = SweepParameter::kNone;
  double value = 0.0;

  std::string name() const;
  static Condition parse(std::string_view text);

  friend bool operator==(const Condition&, const Condition&) = default;
  friend bool operator<(const Condition& a, const Condition& b);
};

struct ResultRow {
  std::string dataset;
  double fraction = 0.0;
  std::size_t split_id = 0;
  Condition condition;
  std::optional<std::size_t> k_selected;  // defended rows only
  std::optional<double> eta;              // defended rows only
  double test_error = 0.0;
  double validation_error = 0.0;
  std::size_t relabeled = 0;  // in-memory only; not part of the CSV schema
};

class ResultsTable {
 public:
  static constexpr std::string_view kHeader =
      "dataset,fraction,split_id,condition,k_selected,eta,test_error,validation_error";

  /// Rejects duplicate keys and errors outside [0, 1].
  void add(ResultRow row);
  void append(const ResultsTable& other);

  const std::vector<ResultRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  /// First row matching the key, or nullptr.
  const ResultRow* find(std::string_view dataset, double fraction, std::size_t split_id,
                        const Condition& condition) const;

  std::string to_csv() const;
  static ResultsTable from_csv(std::string_view text);

 private:
  std::vector<ResultRow> rows_;
};

struct SummaryRow {
  std::string dataset;
  double fraction = 0.0;
  Condition condition;
  double mean_error = 0.0;
  double std_error = 0.0;  // population standard deviation over splits
  std::size_t n_splits = 0;
};

/// Means and standard deviations over splits, ordered by dataset, condition, fraction.
std::vector<SummaryRow> aggregate(const ResultsTable& table);
std::string summary_to_csv(const std::vector<SummaryRow>& summary);
/// Mean error for one (dataset, fraction, condition), if present.
std::optional<double> summary_mean(const std::vector<SummaryRow>& summary, double fraction,
                                   const Condition& condition);

struct ExperimentConfig {
  std::string dataset_id = "custom";
  std::vector<double> poison_fractions{0.0, 0.05, 0.10, 0.15, 0.20};
  std::size_t repetitions = 10;
  std::size_t n_train = 100;
  std::size_t n_val = 100;
  TrainConfig train_config;
  double eta = 0.5;
  std::vector<std::size_t> k_grid{1, 3, 5, 10, 15, 20};
  /// k held fixed while a sensitivity sweep varies eta.
  std::size_t sensitivity_k = 10;
  std::size_t max_passes = 1;
  std::uint64_t master_seed = 0;
  /// When nonzero, a seeded subsample of this many rows replaces the dataset.
  std::size_t row_budget = 0;
  /// Splits evaluated concurrently. Results do not depend on this value.
  std::size_t jobs = 1;

  void validate() const;
};

struct KSelection {
  std::size_t k = 0;
  double validation_error = 0.0;
};

/// Sanitizes with each k in the grid, trains, and keeps the k with the lowest
/// validation 0/1 error (smallest k on ties).
KSelection select_k(const LabeledDataset& poisoned_train, const LabeledDataset& trusted_validation,
                    const std::vector<std::size_t>& k_grid, double eta,
                    const TrainConfig& train_config, std::size_t max_passes = 1);

/// Clean, undefended and defended test errors per split and poison fraction.
ResultsTable run_poison_sweep(const LabeledDataset& data, const ExperimentConfig& config);

/// Like run_poison_sweep, but defended rows use fixed defence parameters:
/// varying k holds eta at config.eta; varying eta holds k at config.sensitivity_k.
/// Clean and undefended rows are included as the baseline.
ResultsTable sensitivity_sweep(const LabeledDataset& data, const ExperimentConfig& config,
                               SweepParameter vary, const std::vector<double>& values);

}  // namespace flipguard
