#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace flipguard {

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
/// Transparently inflates gzip data (detected by magic bytes).
std::vector<std::uint8_t> read_binary_file_maybe_gzip(const std::filesystem::path& path);
std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& compressed);

// Writes to a sibling temp file and renames it over `path`, so readers never
// observe a partially written file. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace flipguard
