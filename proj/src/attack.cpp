#include "flipguard/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "flipguard/error.hpp"
#include "flipguard/parallel.hpp"
#include "flipguard/random.hpp"

namespace flipguard {

FlipVector FlipVector::from_indices(std::size_t length, const std::vector<std::size_t>& indices) {
  FlipVector u(length);
  for (std::size_t i : indices) u.set(i);
  return u;
}

void FlipVector::set(std::size_t i) {
  if (i >= bits_.size()) throw DataError("flip index " + std::to_string(i) + " out of range");
  if (bits_[i] != 0) throw DataError("flip index " + std::to_string(i) + " set twice");
  bits_[i] = 1;
  ++set_count_;
}

std::vector<std::size_t> FlipVector::indices() const {
  std::vector<std::size_t> out;
  out.reserve(set_count_);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] != 0) out.push_back(i);
  }
  return out;
}

LabeledDataset apply_flips(const LabeledDataset& data, const FlipVector& flips) {
  if (flips.length() != data.size()) {
    throw DataError("flip vector has length " + std::to_string(flips.length()) +
                    ", dataset has " + std::to_string(data.size()));
  }
  auto labels = data.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (flips.test(i)) labels[i] = flipped(labels[i]);
  }
  return data.with_labels(std::move(labels));
}

double attack_objective(const LabeledDataset& train, const LabeledDataset& validation,
                        const FlipVector& flips, const TrainConfig& config) {
  return avg_loss(train_sgd(apply_flips(train, flips), config), validation);
}

namespace {

void check_attack_inputs(const LabeledDataset& train, const LabeledDataset& validation,
                         std::size_t p, const TrainConfig& config) {
  if (p > train.size()) {
    throw ConfigError("attack budget " + std::to_string(p) + " exceeds training size " +
                      std::to_string(train.size()));
  }
  if (validation.empty()) throw DataError("attack: empty validation set");
  if (validation.dim() != train.dim()) {
    throw DataError("attack: validation dimension differs from training dimension");
  }
  config.validate();
}

double retrain_and_score(const LabeledDataset& train, std::vector<Label> labels,
                         const LabeledDataset& validation, const TrainConfig& config) {
  return avg_loss(train_sgd(train.with_labels(std::move(labels)), config), validation);
}

}  // namespace

AttackResult lfa_greedy(const LabeledDataset& train, const LabeledDataset& validation,
                        std::size_t p, const TrainConfig& config, std::size_t jobs) {
  check_attack_inputs(train, validation, p, config);
  const std::size_t m = train.size();
  AttackResult result;
  result.flips = FlipVector(m);

  std::vector<Label> current = train.labels();
  std::vector<std::size_t> remaining(m);
  for (std::size_t i = 0; i < m; ++i) remaining[i] = i;
  std::vector<double> scores;

  for (std::size_t round = 1; round <= p; ++round) {
    scores.assign(remaining.size(), 0.0);
    parallel_for(remaining.size(), jobs, [&](std::size_t c) {
      auto labels = current;
      labels[remaining[c]] = flipped(labels[remaining[c]]);
      scores[c] = retrain_and_score(train, std::move(labels), validation, config);
    });
    // `remaining` is ascending, so strict > keeps the lowest index on ties.
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
      if (scores[c] > scores[best]) best = c;
    }
    const std::size_t chosen = remaining[best];
    current[chosen] = flipped(current[chosen]);
    result.flips.set(chosen);
    result.trace.push_back({round, chosen, scores[best]});
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  result.poisoned = train.with_labels(std::move(current));
  return result;
}

std::uint64_t combinations(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t value = 1;
  for (std::size_t i = 0; i < k; ++i) {
    // value * (n - i) is divisible by (i + 1); cancel the gcd first so the
    // division is exact without forming the full product.
    const std::uint64_t g = std::gcd(value, std::uint64_t{i + 1});
    const std::uint64_t factor = (n - i) / ((i + 1) / g);
    value /= g;
    if (value > kMax / factor) return kMax;
    value *= factor;
  }
  return value;
}

AttackResult brute_force_attack(const LabeledDataset& train, const LabeledDataset& validation,
                                std::size_t p, const TrainConfig& config,
                                std::uint64_t max_combinations, std::size_t jobs) {
  check_attack_inputs(train, validation, p, config);
  const std::size_t m = train.size();
  const std::uint64_t total = combinations(m, p);
  if (total > max_combinations) {
    throw ConfigError("brute force: C(" + std::to_string(m) + ", " + std::to_string(p) +
                      ") = " + std::to_string(total) + " subsets exceeds the cap of " +
                      std::to_string(max_combinations));
  }

  // Lexicographic enumeration of p-subsets of [0, m).
  std::vector<std::vector<std::size_t>> subsets;
  subsets.reserve(static_cast<std::size_t>(total));
  std::vector<std::size_t> combo(p);
  for (std::size_t i = 0; i < p; ++i) combo[i] = i;
  while (true) {
    subsets.push_back(combo);
    std::size_t i = p;
    while (i > 0 && combo[i - 1] == m - p + (i - 1)) --i;
    if (i == 0) break;
    ++combo[i - 1];
    for (std::size_t j = i; j < p; ++j) combo[j] = combo[j - 1] + 1;
  }

  std::vector<double> scores(subsets.size());
  parallel_for(subsets.size(), jobs, [&](std::size_t s) {
    scores[s] = attack_objective(train, validation, FlipVector::from_indices(m, subsets[s]), config);
  });
  std::size_t best = 0;
  for (std::size_t s = 1; s < scores.size(); ++s) {
    if (scores[s] > scores[best]) best = s;
  }

  AttackResult result;
  result.flips = FlipVector::from_indices(m, subsets[best]);
  result.poisoned = apply_flips(train, result.flips);
  std::vector<std::size_t> prefix;
  for (std::size_t k = 0; k < p; ++k) {
    prefix.push_back(subsets[best][k]);
    const double loss = k + 1 == p ? scores[best]
                                   : attack_objective(train, validation,
                                                      FlipVector::from_indices(m, prefix), config);
    result.trace.push_back({k + 1, subsets[best][k], loss});
  }
  return result;
}

AttackResult random_flip(const LabeledDataset& train, std::size_t p, std::uint64_t seed) {
  if (p > train.size()) {
    throw ConfigError("attack budget " + std::to_string(p) + " exceeds training size " +
                      std::to_string(train.size()));
  }
  auto order = shuffled_indices(train.size(), seed);
  order.resize(p);
  AttackResult result;
  result.flips = FlipVector::from_indices(train.size(), order);
  result.poisoned = apply_flips(train, result.flips);
  return result;
}

std::size_t budget_from_fraction(double fraction, std::size_t m) {
  if (!(fraction >= 0.0) || fraction > 1.0) {
    throw ConfigError("poison fraction must lie in [0, 1]");
  }
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 0.5));
}

std::string trace_to_csv(const std::vector<TraceStep>& trace) {
  std::string out = "step,flipped_index,validation_loss\n";
  for (const auto& t : trace) {
    out += std::to_string(t.step) + "," + std::to_string(t.flipped_index) + "," +
           format_double(t.validation_loss) + "\n";
  }
  return out;
}

std::string flips_to_text(const FlipVector& flips) {
  std::string out;
  for (std::size_t i : flips.indices()) out += std::to_string(i) + "\n";
  return out;
}

}  // namespace flipguard
