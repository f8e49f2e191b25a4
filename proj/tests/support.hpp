#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "flipguard/dataset.hpp"

namespace flipguard::testing {

// Two Gaussian blobs centred at (-sep/2, 0, ...) labelled -1 and (+sep/2, 0, ...)
// labelled +1, interleaved so index parity tracks the class.
inline LabeledDataset make_blobs(std::size_t per_class, std::size_t dim, double sep, double sigma,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  LabeledDataset data(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (Label y : {Label::kNegative, Label::kPositive}) {
      for (std::size_t j = 0; j < dim; ++j) x[j] = noise(rng);
      x[0] += to_double(y) * sep / 2.0;
      data.push_back(x, y);
    }
  }
  return data;
}

inline LabeledDataset from_rows(const std::vector<std::vector<double>>& rows,
                                const std::vector<int>& labels) {
  LabeledDataset data(rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) data.push_back(rows[i], label_from_int(labels[i]));
  return data;
}

inline std::vector<int> label_ints(const LabeledDataset& data) {
  std::vector<int> out;
  for (Label y : data.labels()) out.push_back(to_int(y));
  return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("flipguard-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace flipguard::testing
