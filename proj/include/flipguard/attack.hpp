#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "flipguard/dataset.hpp"
#include "flipguard/linear_model.hpp"

namespace flipguard {

/// Indicator vector over training indices: bit i set means label i is negated.
class FlipVector {
 public:
  FlipVector() = default;
  explicit FlipVector(std::size_t length) : bits_(length, 0) {}
  static FlipVector from_indices(std::size_t length, const std::vector<std::size_t>& indices);

  std::size_t length() const { return bits_.size(); }
  std::size_t budget() const { return set_count_; }
  bool test(std::size_t i) const { return bits_.at(i) != 0; }
  void set(std::size_t i);
  /// Set indices in ascending order.
  std::vector<std::size_t> indices() const;

  friend bool operator==(const FlipVector&, const FlipVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t set_count_ = 0;
};

struct TraceStep {
  std::size_t step = 0;           // 1-based round
  std::size_t flipped_index = 0;  // training index committed this round
  double validation_loss = 0.0;   // mean validation hinge loss after retraining

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct AttackResult {
  LabeledDataset poisoned;
  FlipVector flips;
  std::vector<TraceStep> trace;
};

/// Labels negated exactly where flips is set; features copied unchanged.
LabeledDataset apply_flips(const LabeledDataset& data, const FlipVector& flips);

/// Mean validation hinge loss of a model trained from scratch on `train` with
/// `flips` applied. This is the attacker's objective.
double attack_objective(const LabeledDataset& train, const LabeledDataset& validation,
                        const FlipVector& flips, const TrainConfig& config);

/// Greedy label flipping: p rounds, each retraining once per remaining index
/// with that index flipped on top of the current poisoned set and committing
/// the index whose flip maximizes validation hinge loss (lowest index on ties).
/// Candidate evaluation within a round may use up to `jobs` threads; the
/// result does not depend on `jobs`.
AttackResult lfa_greedy(const LabeledDataset& train, const LabeledDataset& validation,
                        std::size_t p, const TrainConfig& config, std::size_t jobs = 1);

inline constexpr std::uint64_t kDefaultBruteForceCap = 10'000;

/// Exact maximizer of the attack objective over all p-subsets, for small
/// instances only. Ties go to the lexicographically smallest index set. The
/// trace lists the chosen indices ascending; row k carries the objective with
/// the first k of them flipped, so the last row is the optimum.
AttackResult brute_force_attack(const LabeledDataset& train, const LabeledDataset& validation,
                                std::size_t p, const TrainConfig& config,
                                std::uint64_t max_combinations = kDefaultBruteForceCap,
                                std::size_t jobs = 1);

/// Uniformly random p-subset, seeded. Empty trace.
AttackResult random_flip(const LabeledDataset& train, std::size_t p, std::uint64_t seed);

/// round(fraction * m), halves rounded up.
std::size_t budget_from_fraction(double fraction, std::size_t m);

/// Binomial coefficient saturating at UINT64_MAX.
std::uint64_t combinations(std::size_t n, std::size_t k);

std::string trace_to_csv(const std::vector<TraceStep>& trace);
std::string flips_to_text(const FlipVector& flips);

}  // namespace flipguard
