#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flipguard/dataset.hpp"

namespace flipguard {

/// A benchmark the tools know how to convert into canonical CSV.
struct DatasetSource {
  std::string id;
  std::string description;
  std::vector<std::string> urls;  // download locations, for the fetch tool
  std::size_t rows = 0;           // reference shape of the published file
  std::size_t dim = 0;
  std::size_t positives = 0;
  std::string note;  // known differences from commonly quoted figures
};

const std::vector<DatasetSource>& known_datasets();
std::optional<DatasetSource> find_dataset(const std::string& id);

/// Converts a raw source file into a labeled dataset.
///
/// breastcancer: UCI wdbc.data (id, M/B, 30 features; malignant is +1) or the
///   scikit-learn breast_cancer.csv copy (count header row, 0 = malignant).
/// spambase: UCI spambase.data or the KEEL .dat copy; spam is +1.
/// mnist17: a directory holding train-images-idx3-ubyte and
///   train-labels-idx1-ubyte (optionally .gz), or a digit-first CSV; digit 1
///   is +1 and digit 7 is -1.
LabeledDataset convert_source(const std::string& id, const std::filesystem::path& source);

}  // namespace flipguard
