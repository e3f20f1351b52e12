#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mlbm {

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Formats a double with 17 significant digits ("%.17g").
std::string format_double(double value);

}  // namespace mlbm
