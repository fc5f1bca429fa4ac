#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace qsmooth {

/// Decimal with 17 significant digits ("%.17g"), enough to round-trip a double.
std::string format_double(double v);

/// Minimal CSV table: header plus rows of already-formatted cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Throws Error naming the column if the header differs from `expected`.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected = {});

}  // namespace qsmooth
