#pragma once

#include <filesystem>
#include <string>

namespace flipguard::cli {

/// Downloads `url` (http or https, redirects followed) to `dest` atomically.
void download(const std::string& url, const std::filesystem::path& dest);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace flipguard::cli
