#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace flipguard::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kInternalError = 3,
};

/// Environment variable naming the dataset cache directory (default "data").
inline constexpr const char* kDataDirEnv = "FLIPGUARD_DATA_DIR";

/// Entry point shared by the executable and the tests. `args[0]` is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands `--config FILE` (flat key=value lines, '#' comments) into
/// `--key=value` arguments inserted after the subcommand. Keys also given
/// explicitly on the command line are skipped, so flags win over the file.
std::vector<std::string> expand_config_file(const std::vector<std::string>& args);

}  // namespace flipguard::cli
