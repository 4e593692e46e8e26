#include "erlab/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "erlab/errors.hpp"

namespace erlab {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ValidationError("CSV has no column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  const auto v = optional_number(row, name);
  if (!v) throw ValidationError("CSV row " + std::to_string(row) + " has an empty '" + std::string(name) + "' field");
  return *v;
}

std::optional<double> CsvTable::optional_number(std::size_t row, std::string_view name) const {
  const auto& field = rows.at(row).at(column(name));
  if (field.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("CSV field '" + field + "' in column '" + std::string(name) + "' is not a number");
  }
}

CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("CSV input is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split(line);
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != table.header.size())
      throw ValidationError("CSV row has " + std::to_string(row.size()) + " fields, header has " +
                            std::to_string(table.header.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open CSV file '" + path + "'");
  return read_csv(in);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace erlab
