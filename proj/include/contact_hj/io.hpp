#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace contact_hj {

// Shortest decimal form that round-trips a double; negative zero prints as 0.
std::string FormatDouble(double v);

// Writes `content` to a sibling temp file and renames it over `path`, so
// readers never observe a partial file. Creates parent directories.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& content);

std::string ReadFile(const std::filesystem::path& path);

// Gnuplot-ready whitespace-separated columns with a commented header.
std::string DatTable(const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);

}  // namespace contact_hj
