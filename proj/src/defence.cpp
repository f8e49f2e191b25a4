#include "flipguard/defence.hpp"

#include <algorithm>
#include <cmath>

#include "flipguard/error.hpp"
#include "flipguard/parallel.hpp"

namespace flipguard {

void DefenceConfig::validate(std::size_t m) const {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (!(eta >= 0.5 && eta <= 1.0)) throw ConfigError("eta must lie in [0.5, 1]");
  if (max_passes < 1) throw ConfigError("max_passes must be at least 1");
  if (m > 0 && k > m - 1) {
    throw ConfigError("k = " + std::to_string(k) + " needs at least " + std::to_string(k + 1) +
                      " examples, dataset has " + std::to_string(m));
  }
}

std::size_t SanitizationReport::total_relabels() const {
  std::size_t total = 0;
  for (const auto& pass : passes) total += pass.size();
  return total;
}

std::vector<std::vector<std::size_t>> SanitizationReport::relabeled_indices_per_pass() const {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& pass : passes) {
    auto& indices = out.emplace_back();
    for (const auto& r : pass) indices.push_back(r.index);
  }
  return out;
}

std::vector<std::size_t> knn_indices(const LabeledDataset& data, std::size_t i, std::size_t k) {
  const std::size_t m = data.size();
  if (i >= m) throw ConfigError("knn query index out of range");
  if (k < 1 || k > m - 1) {
    throw ConfigError("k = " + std::to_string(k) + " out of range [1, " + std::to_string(m - 1) +
                      "]");
  }
  const auto query = data.features(i);
  // Squared distances order the same as distances.
  std::vector<std::pair<double, std::size_t>> candidates;
  candidates.reserve(m - 1);
  for (std::size_t j = 0; j < m; ++j) {
    if (j == i) continue;
    const auto x = data.features(j);
    double dist = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double diff = x[c] - query[c];
      dist += diff * diff;
    }
    candidates.emplace_back(dist, j);
  }
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end());
  std::vector<std::size_t> out(k);
  for (std::size_t n = 0; n < k; ++n) out[n] = candidates[n].second;
  return out;
}

double confidence(std::span<const Label> labels) {
  if (labels.empty()) throw ConfigError("confidence of an empty neighbourhood");
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::kPositive));
  return static_cast<double>(std::max(pos, labels.size() - pos)) /
         static_cast<double>(labels.size());
}

Label mode_label(std::span<const Label> labels) {
  if (labels.empty()) throw ConfigError("mode of an empty neighbourhood");
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::kPositive));
  return 2 * pos >= labels.size() ? Label::kPositive : Label::kNegative;
}

PassResult sanitize_pass(const LabeledDataset& data, const DefenceConfig& config, std::size_t jobs) {
  config.validate();
  if (data.size() < config.k + 1) {
    throw DataError("sanitize: dataset of " + std::to_string(data.size()) +
                    " examples is too small for k = " + std::to_string(config.k));
  }
  const auto& old_labels = data.labels();
  std::vector<Label> new_labels = old_labels;
  parallel_for(data.size(), jobs, [&](std::size_t i) {
    const auto neighbours = knn_indices(data, i, config.k);
    std::vector<Label> hood;
    hood.reserve(neighbours.size());
    for (std::size_t j : neighbours) hood.push_back(old_labels[j]);
    const auto pos = static_cast<std::size_t>(std::count(hood.begin(), hood.end(), Label::kPositive));
    if (2 * pos == hood.size()) return;
    if (confidence(hood) >= config.eta) new_labels[i] = mode_label(hood);
  });

  PassResult result;
  for (std::size_t i = 0; i < old_labels.size(); ++i) {
    if (new_labels[i] != old_labels[i]) result.relabels.push_back({i, old_labels[i], new_labels[i]});
  }
  result.data = data.with_labels(std::move(new_labels));
  return result;
}

SanitizeResult sanitize(const LabeledDataset& data, const DefenceConfig& config, std::size_t jobs) {
  config.validate();
  SanitizeResult result{data, {}};
  while (result.report.passes_run() < config.max_passes) {
    auto pass = sanitize_pass(result.data, config, jobs);
    const bool changed = !pass.relabels.empty();
    result.data = std::move(pass.data);
    result.report.passes.push_back(std::move(pass.relabels));
    if (!changed) break;
  }
  result.report.converged = result.report.passes.back().empty();
  return result;
}

std::string report_to_csv(const SanitizationReport& report) {
  std::string out = "pass,index,old_label,new_label\n";
  for (std::size_t p = 0; p < report.passes.size(); ++p) {
    for (const auto& r : report.passes[p]) {
      out += std::to_string(p + 1) + "," + std::to_string(r.index) + "," +
             std::to_string(to_int(r.old_label)) + "," + std::to_string(to_int(r.new_label)) + "\n";
    }
  }
  return out;
}

}  // namespace flipguard
