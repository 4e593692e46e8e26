#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace erlab {

/// Minimal comma-separated table: no quoting, first line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
  std::optional<double> optional_number(std::size_t row, std::string_view name) const;
};

CsvTable read_csv(std::istream& is);
CsvTable read_csv_file(const std::string& path);

/// Shortest round-tripping form with 17 significant digits.
std::string format_double(double v);

}  // namespace erlab
