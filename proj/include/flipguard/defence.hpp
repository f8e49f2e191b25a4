#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flipguard/dataset.hpp"

namespace flipguard {

struct DefenceConfig {
  std::size_t k = 10;
  double eta = 0.5;
  std::size_t max_passes = 1;

  /// Checks 1 <= k, 0.5 <= eta <= 1, max_passes >= 1; with m > 0 also k <= m - 1.
  void validate(std::size_t m = 0) const;
};

struct Relabel {
  std::size_t index = 0;
  Label old_label = Label::kNegative;
  Label new_label = Label::kNegative;

  friend bool operator==(const Relabel&, const Relabel&) = default;
};

struct SanitizationReport {
  std::vector<std::vector<Relabel>> passes;  // one entry per pass run
  bool converged = false;

  std::size_t passes_run() const { return passes.size(); }
  std::size_t total_relabels() const;
  std::vector<std::vector<std::size_t>> relabeled_indices_per_pass() const;
};

/// The k indices != i closest to example i in euclidean distance, ordered by
/// (distance, index).
std::vector<std::size_t> knn_indices(const LabeledDataset& data, std::size_t i, std::size_t k);

/// Share of the most common label. On an exact tie this is 0.5.
double confidence(std::span<const Label> labels);
/// Most common label; +1 on an exact tie.
Label mode_label(std::span<const Label> labels);

struct PassResult {
  LabeledDataset data;
  std::vector<Relabel> relabels;
};

/// One synchronous pass: every neighbourhood is read from the labels as they
/// were at the start of the pass. A point takes its neighbourhood's majority
/// label when the majority share reaches eta. An exact 50/50 split never
/// relabels.
PassResult sanitize_pass(const LabeledDataset& data, const DefenceConfig& config,
                         std::size_t jobs = 1);

struct SanitizeResult {
  LabeledDataset data;
  SanitizationReport report;
};

/// Repeats sanitize_pass until a pass changes nothing or max_passes is hit.
SanitizeResult sanitize(const LabeledDataset& data, const DefenceConfig& config,
                        std::size_t jobs = 1);

/// CSV rows: pass,index,old_label,new_label (pass is 1-based).
std::string report_to_csv(const SanitizationReport& report);

}  // namespace flipguard
