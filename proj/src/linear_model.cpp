#include "flipguard/linear_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "flipguard/error.hpp"
#include "flipguard/random.hpp"

namespace flipguard {

namespace {

void check_dim(const Weights& weights, std::span<const double> x) {
  if (x.size() != weights.dim()) {
    throw DataError("dimension mismatch: weights have " + std::to_string(weights.dim()) +
                    ", example has " + std::to_string(x.size()));
  }
}

void require_nonempty(const LabeledDataset& data, const char* what) {
  if (data.empty()) throw DataError(std::string(what) + ": empty dataset");
}

}  // namespace

double Weights::score(std::span<const double> x) const {
  double s = bias;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
  return s;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive and finite");
  }
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
}

double hinge_loss(const Weights& weights, ExampleView example) {
  check_dim(weights, example.features);
  return std::max(0.0, 1.0 - to_double(example.label) * weights.score(example.features));
}

Subgradient hinge_subgradient(const Weights& weights, ExampleView example) {
  check_dim(weights, example.features);
  Subgradient g{std::vector<double>(weights.dim(), 0.0), 0.0};
  const double y = to_double(example.label);
  if (y * weights.score(example.features) < 1.0) {
    for (std::size_t j = 0; j < g.w.size(); ++j) g.w[j] = -y * example.features[j];
    g.bias = -y;
  }
  return g;
}

Weights train_sgd(const LabeledDataset& data, const TrainConfig& config) {
  require_nonempty(data, "train_sgd");
  config.validate();
  const std::size_t d = data.dim();
  const double lr = config.learning_rate;
  Weights model(d);

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
      shuffle_in_place(order, rng);
    }
    // Inlined subgradient step; this loop dominates the cost of the greedy attack.
    for (std::size_t i : order) {
      const auto x = data.features(i);
      const double y = to_double(data.label(i));
      if (y * model.score(x) < 1.0) {
        const double step = lr * y;
        for (std::size_t j = 0; j < d; ++j) model.w[j] += step * x[j];
        if (config.use_bias) model.bias += step;
      }
    }
  }
  return model;
}

Label predict(const Weights& weights, std::span<const double> x) {
  check_dim(weights, x);
  return weights.score(x) >= 0.0 ? Label::kPositive : Label::kNegative;
}

double avg_loss(const Weights& weights, const LabeledDataset& data) {
  require_nonempty(data, "avg_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += hinge_loss(weights, data[i]);
  return total / static_cast<double>(data.size());
}

double zero_one_error(const Weights& weights, const LabeledDataset& data) {
  require_nonempty(data, "zero_one_error");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(weights, data.features(i)) != data.label(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

std::string format_weights(const Weights& weights) {
  std::string out;
  for (double v : weights.w) out += format_double(v) + "\n";
  out += format_double(weights.bias) + "\n";
  return out;
}

Weights parse_weights(std::string_view text) {
  std::vector<double> values;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size() || !std::isfinite(v)) {
      throw DataError("weights: bad value '" + line + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw DataError("weights: no values");
  Weights out(values.size() - 1);
  std::copy(values.begin(), values.end() - 1, out.w.begin());
  out.bias = values.back();
  return out;
}

}  // namespace flipguard
