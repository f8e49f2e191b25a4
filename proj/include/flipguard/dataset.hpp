#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flipguard {

/// Binary class label. Only -1 and +1 are representable through the helpers
/// below; raw values never reach this type without going through a mapping.
enum class Label : std::int8_t { kNegative = -1, kPositive = 1 };

constexpr int to_int(Label y) { return static_cast<int>(y); }
constexpr double to_double(Label y) { return static_cast<double>(y); }
constexpr Label flipped(Label y) {
  return y == Label::kPositive ? Label::kNegative : Label::kPositive;
}
Label label_from_int(int value);

/// Read-only view of one row.
struct ExampleView {
  std::span<const double> features;
  Label label;
};

/// Ordered, dense collection of feature vectors with binary labels.
///
/// Rows are stored contiguously (row-major). Indices are stable: every
/// operation that returns a derived dataset preserves row order, so an index
/// means the same example before and after an attack or sanitization pass.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::size_t dim) : dim_(dim) {}
  LabeledDataset(std::size_t dim, std::vector<double> features, std::vector<Label> labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return labels_.empty(); }

  std::span<const double> features(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  Label label(std::size_t i) const { return labels_[i]; }
  ExampleView operator[](std::size_t i) const { return {features(i), labels_[i]}; }

  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<double>& raw_features() const { return features_; }

  void push_back(std::span<const double> x, Label y);

  /// Same features, labels replaced. Throws on length mismatch.
  LabeledDataset with_labels(std::vector<Label> labels) const;
  /// Rows at the given indices, in the given order.
  LabeledDataset subset(std::span<const std::size_t> indices) const;

  std::size_t count(Label y) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> features_;
  std::vector<Label> labels_;
};

struct DataSplit {
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
};

/// Per-feature affine map (x - mean) / max(stddev, floor).
struct Standardizer {
  static constexpr double kStddevFloor = 1e-8;
  std::vector<double> mean;
  std::vector<double> stddev;  // population stddev, already floored
};

struct CsvOptions {
  /// Column holding the label; negative values count from the end (-1 = last).
  int label_column = -1;
  /// Columns dropped before parsing features (e.g. a record id).
  std::vector<int> skip_columns;
  /// Leading lines discarded unconditionally.
  std::size_t skip_rows = 0;
  /// Raw label value mapped to +1. When unset, the smaller of the two raw
  /// values (numerically if both parse as numbers) maps to -1.
  std::optional<std::string> positive_value;
};

LabeledDataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
/// Parses CSV text already in memory; `origin` is used in error messages.
LabeledDataset parse_csv(std::string_view text, const CsvOptions& options = {},
                         std::string_view origin = "<memory>");

/// Canonical form: features in order, label last as -1/+1, no header.
std::string to_canonical_csv(const LabeledDataset& data);
void write_canonical_csv(const std::filesystem::path& path, const LabeledDataset& data);

/// Raw MNIST: pixel bytes row-major per image plus digit labels.
struct MnistImages {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> digits;
  std::size_t count() const { return digits.size(); }
};

MnistImages parse_mnist_idx(std::span<const std::uint8_t> image_file,
                            std::span<const std::uint8_t> label_file);
MnistImages load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
/// CSV export format: digit in the first column followed by rows*cols pixels.
MnistImages load_mnist_csv(const std::filesystem::path& path, std::size_t rows = 28,
                           std::size_t cols = 28);

/// Keeps only `positive_digit` (+1) and `negative_digit` (-1), pixels scaled to [0,1].
LabeledDataset binarize_mnist(const MnistImages& images, int positive_digit, int negative_digit);

DataSplit random_split(const LabeledDataset& data, std::size_t n_train, std::size_t n_val,
                       std::uint64_t seed);

/// Seeded row subsample without replacement, original order preserved.
LabeledDataset subsample(const LabeledDataset& data, std::size_t n, std::uint64_t seed);

Standardizer fit_standardizer(const LabeledDataset& train);
LabeledDataset apply_standardizer(const Standardizer& s, const LabeledDataset& data);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace flipguard
