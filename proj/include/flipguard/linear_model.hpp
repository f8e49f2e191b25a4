#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flipguard/dataset.hpp"

namespace flipguard {

struct Weights {
  std::vector<double> w;
  double bias = 0.0;

  explicit Weights(std::size_t dim = 0) : w(dim, 0.0) {}
  std::size_t dim() const { return w.size(); }
  double score(std::span<const double> x) const;

  friend bool operator==(const Weights&, const Weights&) = default;
};

/// SGD hyperparameters. Defaults are the learning rate and epoch count used
/// throughout the experiments (0.01, 100).
struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 100;
  std::uint64_t seed = 0;
  bool shuffle = true;
  bool use_bias = true;

  void validate() const;
};

struct Subgradient {
  std::vector<double> w;
  double bias = 0.0;
};

/// max(0, 1 - y (w.x + b))
double hinge_loss(const Weights& weights, ExampleView example);

/// (-y x, -y) strictly inside the margin, zero otherwise (including the kink).
Subgradient hinge_subgradient(const Weights& weights, ExampleView example);

/// Plain SGD from w = 0, b = 0 with constant step and no regularization.
/// Each epoch visits every example once; with `shuffle` the order is a
/// permutation seeded by (seed, epoch), otherwise file order.
Weights train_sgd(const LabeledDataset& data, const TrainConfig& config);

/// +1 when w.x + b >= 0.
Label predict(const Weights& weights, std::span<const double> x);

double avg_loss(const Weights& weights, const LabeledDataset& data);
double zero_one_error(const Weights& weights, const LabeledDataset& data);

/// One value per line, bias last.
std::string format_weights(const Weights& weights);
Weights parse_weights(std::string_view text);

}  // namespace flipguard
