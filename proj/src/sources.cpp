#include "flipguard/sources.hpp"

#include <sstream>

#include "flipguard/error.hpp"
#include "flipguard/io.hpp"

namespace flipguard {

const std::vector<DatasetSource>& known_datasets() {
  static const std::vector<DatasetSource> kSources{
      {"breastcancer",
       "Wisconsin Diagnostic Breast Cancer, malignant (+1) vs benign (-1)",
       {"https://archive.ics.uci.edu/ml/machine-learning-databases/breast-cancer-wisconsin/"
        "wdbc.data"},
       569, 30, 212, ""},
      {"spambase",
       "UCI Spambase, spam (+1) vs non-spam (-1)",
       {"https://archive.ics.uci.edu/ml/machine-learning-databases/spambase/spambase.data"},
       4601, 57, 1813,
       "often quoted as 4,100 examples with 54 features; the full file (4,601 x 57) is used "
       "as-is, and the KEEL copy drops 4 rows"},
      {"mnist17",
       "MNIST training set, digit 1 (+1) vs digit 7 (-1), pixels scaled to [0,1]",
       {"https://storage.googleapis.com/cvdf-datasets/mnist/train-images-idx3-ubyte.gz",
        "https://storage.googleapis.com/cvdf-datasets/mnist/train-labels-idx1-ubyte.gz"},
       13007, 784, 6742, ""},
  };
  return kSources;
}

std::optional<DatasetSource> find_dataset(const std::string& id) {
  for (const auto& s : known_datasets()) {
    if (s.id == id) return s;
  }
  return std::nullopt;
}

namespace {

// Drops ARFF/KEEL style '@' directives and '%' comments.
std::string strip_directives(const std::string& text) {
  std::istringstream in(text);
  std::string out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && (line[first] == '@' || line[first] == '%')) {
      out += '\n';  // keep line numbers stable for error messages
      continue;
    }
    out += line;
    out += '\n';
  }
  return out;
}

std::size_t first_line_cells(const std::string& text) {
  const auto line = text.substr(0, text.find('\n'));
  std::size_t cells = 1;
  for (char c : line) cells += c == ',' ? 1 : 0;
  return cells;
}

std::filesystem::path find_with_optional_gz(const std::filesystem::path& dir, const std::string& name) {
  for (const auto& candidate : {dir / name, dir / (name + ".gz")}) {
    if (std::filesystem::exists(candidate)) return candidate;
  }
  throw DataError((dir / name).string() + ": not found (also tried .gz)");
}

}  // namespace

LabeledDataset convert_source(const std::string& id, const std::filesystem::path& source) {
  if (id == "breastcancer") {
    const auto text = read_text_file(source);
    CsvOptions options;
    if (first_line_cells(text) == 4) {
      // scikit-learn copy: "569,30,malignant,benign" then features, target (0 = malignant)
      options.skip_rows = 1;
      options.label_column = -1;
      options.positive_value = "0";
    } else {
      options.skip_columns = {0};
      options.label_column = 1;
      options.positive_value = "M";
    }
    return parse_csv(text, options, source.string());
  }
  if (id == "spambase") {
    CsvOptions options;
    options.positive_value = "1";
    return parse_csv(strip_directives(read_text_file(source)), options, source.string());
  }
  if (id == "mnist17") {
    MnistImages images;
    if (std::filesystem::is_directory(source)) {
      const auto image_bytes = read_binary_file_maybe_gzip(
          find_with_optional_gz(source, "train-images-idx3-ubyte"));
      const auto label_bytes = read_binary_file_maybe_gzip(
          find_with_optional_gz(source, "train-labels-idx1-ubyte"));
      images = parse_mnist_idx(image_bytes, label_bytes);
    } else {
      images = load_mnist_csv(source);
    }
    return binarize_mnist(images, 1, 7);
  }
  throw ConfigError("unknown dataset id '" + id + "' (known: breastcancer, spambase, mnist17)");
}

}  // namespace flipguard
