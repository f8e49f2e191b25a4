#include "flipguard/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "flipguard/error.hpp"
#include "flipguard/io.hpp"
#include "flipguard/random.hpp"

namespace flipguard {

Label label_from_int(int value) {
  if (value == 1) return Label::kPositive;
  if (value == -1) return Label::kNegative;
  throw DataError("label must be -1 or +1, got " + std::to_string(value));
}

LabeledDataset::LabeledDataset(std::size_t dim, std::vector<double> features,
                               std::vector<Label> labels)
    : dim_(dim), features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.size() != dim_ * labels_.size()) {
    throw DataError("feature buffer holds " + std::to_string(features_.size()) +
                    " values, expected " + std::to_string(dim_ * labels_.size()));
  }
  for (double v : features_) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
}

void LabeledDataset::push_back(std::span<const double> x, Label y) {
  if (x.size() != dim_) {
    throw DataError("example has dimension " + std::to_string(x.size()) + ", dataset has " +
                    std::to_string(dim_));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  features_.insert(features_.end(), x.begin(), x.end());
  labels_.push_back(y);
}

LabeledDataset LabeledDataset::with_labels(std::vector<Label> labels) const {
  if (labels.size() != labels_.size()) {
    throw DataError("label vector has length " + std::to_string(labels.size()) +
                    ", dataset has " + std::to_string(labels_.size()));
  }
  LabeledDataset out = *this;
  out.labels_ = std::move(labels);
  return out;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out(dim_);
  out.features_.reserve(indices.size() * dim_);
  out.labels_.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw DataError("subset index out of range");
    auto x = features(i);
    out.features_.insert(out.features_.end(), x.begin(), x.end());
    out.labels_.push_back(labels_[i]);
  }
  return out;
}

std::size_t LabeledDataset::count(Label y) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), y));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::size_t resolve_column(int column, std::size_t arity) {
  const long resolved = column < 0 ? static_cast<long>(arity) + column : column;
  if (resolved < 0 || resolved >= static_cast<long>(arity)) {
    throw DataError("column " + std::to_string(column) + " out of range for rows with " +
                    std::to_string(arity) + " cells");
  }
  return static_cast<std::size_t>(resolved);
}

// Numeric raw labels are keyed by value so "1", "+1" and "1.0" coincide.
std::string label_key(std::string_view raw) {
  if (auto v = parse_number(raw)) return format_double(*v);
  return std::string(raw);
}

bool raw_label_less(const std::string& a, const std::string& b) {
  auto na = parse_number(a);
  auto nb = parse_number(b);
  if (na && nb) return *na < *nb;
  return a < b;
}

}  // namespace

LabeledDataset parse_csv(std::string_view text, const CsvOptions& options, std::string_view origin) {
  const std::string where(origin);
  std::vector<std::pair<std::size_t, std::string_view>> lines;  // (1-based line number, text)
  {
    std::size_t start = 0;
    std::size_t number = 0;
    while (start <= text.size()) {
      auto nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      ++number;
      auto line = text.substr(start, nl - start);
      if (number > options.skip_rows && !trim(line).empty()) lines.emplace_back(number, line);
      start = nl + 1;
    }
  }
  if (lines.empty()) throw DataError(where + ": no data rows");

  const std::size_t arity = split_cells(lines.front().second).size();
  const std::size_t label_col = resolve_column(options.label_column, arity);
  std::vector<bool> is_feature(arity, true);
  is_feature[label_col] = false;
  for (int c : options.skip_columns) is_feature[resolve_column(c, arity)] = false;
  const auto dim = static_cast<std::size_t>(std::count(is_feature.begin(), is_feature.end(), true));

  // Header: first row whose feature cells are not all numeric.
  {
    const auto cells = split_cells(lines.front().second);
    for (std::size_t c = 0; c < arity; ++c) {
      if (is_feature[c] && !parse_number(cells[c])) {
        lines.erase(lines.begin());
        break;
      }
    }
  }
  if (lines.empty()) throw DataError(where + ": no data rows after header");

  std::vector<double> features;
  features.reserve(lines.size() * dim);
  std::vector<std::string> raw_labels;
  raw_labels.reserve(lines.size());
  std::vector<std::string> distinct;
  std::size_t third_label_row = 0;

  for (const auto& [number, line] : lines) {
    const auto cells = split_cells(line);
    if (cells.size() != arity) {
      throw DataError(where + ": row " + std::to_string(number) + " has " +
                      std::to_string(cells.size()) + " cells, expected " + std::to_string(arity));
    }
    for (std::size_t c = 0; c < arity; ++c) {
      if (!is_feature[c]) continue;
      auto v = parse_number(cells[c]);
      if (!v) {
        throw DataError(where + ": row " + std::to_string(number) + ", column " +
                        std::to_string(c + 1) + ": non-numeric feature '" + std::string(cells[c]) +
                        "'");
      }
      features.push_back(*v);
    }
    auto key = label_key(cells[label_col]);
    if (std::find(distinct.begin(), distinct.end(), key) == distinct.end()) {
      distinct.push_back(key);
      if (distinct.size() == 3) third_label_row = number;
    }
    raw_labels.push_back(std::move(key));
  }

  std::optional<std::string> positive;
  if (options.positive_value) positive = label_key(trim(*options.positive_value));

  if (distinct.size() > 2) {
    throw DataError(where + ": row " + std::to_string(third_label_row) +
                    ": more than two distinct label values");
  }
  std::string positive_key;
  if (distinct.size() == 2) {
    if (positive) {
      if (*positive != distinct[0] && *positive != distinct[1]) {
        throw DataError(where + ": positive label '" + *positive + "' does not occur in the file");
      }
      positive_key = *positive;
    } else {
      positive_key = raw_label_less(distinct[0], distinct[1]) ? distinct[1] : distinct[0];
    }
  } else if (positive) {
    positive_key = *positive;
  } else {
    // A single class is only meaningful when it is already encoded as -1/+1.
    auto v = parse_number(distinct[0]);
    if (!v || (*v != 1.0 && *v != -1.0)) {
      throw DataError(where + ": row " + std::to_string(lines.front().first) +
                      ": only one distinct label value '" + distinct[0] +
                      "'; need two or a canonical -1/+1 encoding");
    }
    positive_key = format_double(1.0);
  }

  std::vector<Label> labels;
  labels.reserve(raw_labels.size());
  for (const auto& raw : raw_labels) {
    labels.push_back(raw == positive_key ? Label::kPositive : Label::kNegative);
  }
  return LabeledDataset(dim, std::move(features), std::move(labels));
}

LabeledDataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  return parse_csv(read_text_file(path), options, path.string());
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw InvariantError("double formatting failed");
  return std::string(buf, ptr);
}

std::string to_canonical_csv(const LabeledDataset& data) {
  std::string out;
  out.reserve(data.size() * (data.dim() + 1) * 8);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features(i)) {
      out += format_double(v);
      out += ',';
    }
    out += data.label(i) == Label::kPositive ? "+1" : "-1";
    out += '\n';
  }
  return out;
}

void write_canonical_csv(const std::filesystem::path& path, const LabeledDataset& data) {
  write_file_atomic(path, to_canonical_csv(data));
}

// ---------------------------------------------------------------------------
// MNIST

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

MnistImages parse_mnist_idx(std::span<const std::uint8_t> image_file,
                            std::span<const std::uint8_t> label_file) {
  if (image_file.size() < 16 || read_be32(image_file, 0) != 0x00000803) {
    throw DataError("MNIST image file: bad IDX header");
  }
  if (label_file.size() < 8 || read_be32(label_file, 0) != 0x00000801) {
    throw DataError("MNIST label file: bad IDX header");
  }
  const std::size_t n = read_be32(image_file, 4);
  MnistImages out;
  out.rows = read_be32(image_file, 8);
  out.cols = read_be32(image_file, 12);
  if (read_be32(label_file, 4) != n) throw DataError("MNIST image/label counts differ");
  const std::size_t pixels = n * out.rows * out.cols;
  if (image_file.size() != 16 + pixels) throw DataError("MNIST image file: truncated payload");
  if (label_file.size() != 8 + n) throw DataError("MNIST label file: truncated payload");
  out.pixels.assign(image_file.begin() + 16, image_file.end());
  out.digits.assign(label_file.begin() + 8, label_file.end());
  for (auto d : out.digits) {
    if (d > 9) throw DataError("MNIST label file: digit out of range");
  }
  return out;
}

MnistImages load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto image_bytes = read_binary_file(images);
  const auto label_bytes = read_binary_file(labels);
  return parse_mnist_idx(image_bytes, label_bytes);
}

MnistImages load_mnist_csv(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
  const auto text = read_text_file(path);
  MnistImages out;
  out.rows = rows;
  out.cols = cols;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    if (cells.size() != 1 + rows * cols) {
      throw DataError(path.string() + ": row " + std::to_string(number) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(1 + rows * cols));
    }
    auto digit = parse_number(cells[0]);
    if (!digit) {
      if (number == 1) continue;  // header
      throw DataError(path.string() + ": row " + std::to_string(number) + ": bad digit");
    }
    if (*digit < 0 || *digit > 9 || *digit != std::floor(*digit)) {
      throw DataError(path.string() + ": row " + std::to_string(number) + ": digit out of range");
    }
    out.digits.push_back(static_cast<std::uint8_t>(*digit));
    for (std::size_t c = 1; c < cells.size(); ++c) {
      auto v = parse_number(cells[c]);
      if (!v || *v < 0 || *v > 255) {
        throw DataError(path.string() + ": row " + std::to_string(number) + ", column " +
                        std::to_string(c + 1) + ": bad pixel");
      }
      out.pixels.push_back(static_cast<std::uint8_t>(*v));
    }
  }
  return out;
}

LabeledDataset binarize_mnist(const MnistImages& images, int positive_digit, int negative_digit) {
  if (positive_digit == negative_digit) {
    throw ConfigError("binarize_mnist: the two digit classes must differ");
  }
  const std::size_t dim = images.rows * images.cols;
  LabeledDataset out(dim);
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < images.count(); ++i) {
    const int digit = images.digits[i];
    if (digit != positive_digit && digit != negative_digit) continue;
    const auto* px = images.pixels.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) row[j] = px[j] / 255.0;
    out.push_back(row, digit == positive_digit ? Label::kPositive : Label::kNegative);
  }
  if (out.count(Label::kPositive) == 0 || out.count(Label::kNegative) == 0) {
    throw DataError("binarize_mnist: a class is empty after filtering");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits and standardization

DataSplit random_split(const LabeledDataset& data, std::size_t n_train, std::size_t n_val,
                       std::uint64_t seed) {
  if (n_train + n_val >= data.size()) {
    throw ConfigError("random_split: train+validation sizes (" + std::to_string(n_train) + "+" +
                      std::to_string(n_val) + ") must be smaller than the dataset (" +
                      std::to_string(data.size()) + ")");
  }
  const auto order = shuffled_indices(data.size(), seed);
  DataSplit split;
  split.seed = seed;
  split.train_indices.assign(order.begin(), order.begin() + n_train);
  split.validation_indices.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test_indices.assign(order.begin() + n_train + n_val, order.end());
  split.train = data.subset(split.train_indices);
  split.validation = data.subset(split.validation_indices);
  split.test = data.subset(split.test_indices);
  return split;
}

LabeledDataset subsample(const LabeledDataset& data, std::size_t n, std::uint64_t seed) {
  if (n >= data.size()) return data;
  auto order = shuffled_indices(data.size(), seed);
  order.resize(n);
  std::sort(order.begin(), order.end());
  return data.subset(order);
}

Standardizer fit_standardizer(const LabeledDataset& train) {
  if (train.empty()) throw DataError("fit_standardizer: empty training set");
  const std::size_t d = train.dim();
  const auto m = static_cast<double>(train.size());
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto x = train.features(i);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x[j];
  }
  for (auto& v : s.mean) v /= m;
  // Constant columns get their exact value as mean so they map to exactly 0.
  for (std::size_t j = 0; j < d; ++j) {
    const double first = train.features(0)[j];
    bool constant = true;
    for (std::size_t i = 1; i < train.size() && constant; ++i) {
      constant = train.features(i)[j] == first;
    }
    if (constant) s.mean[j] = first;
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto x = train.features(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x[j] - s.mean[j];
      s.stddev[j] += diff * diff;
    }
  }
  for (auto& v : s.stddev) v = std::max(std::sqrt(v / m), Standardizer::kStddevFloor);
  return s;
}

LabeledDataset apply_standardizer(const Standardizer& s, const LabeledDataset& data) {
  if (s.mean.size() != data.dim() || s.stddev.size() != data.dim()) {
    throw DataError("apply_standardizer: standardizer has dimension " +
                    std::to_string(s.mean.size()) + ", data has " + std::to_string(data.dim()));
  }
  std::vector<double> out = data.raw_features();
  const std::size_t d = data.dim();
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      auto& v = out[i * d + j];
      v = (v - s.mean[j]) / s.stddev[j];
    }
  }
  return LabeledDataset(d, std::move(out), data.labels());
}

}  // namespace flipguard
