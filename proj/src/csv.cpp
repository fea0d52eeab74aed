#include "fiberae/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace fiberae {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& file, std::initializer_list<std::string> columns)
    : out_(file), columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot write " + file.string());
  bool first = true;
  for (const auto& c : columns) {
    out_ << (first ? "" : ",") << c;
    first = false;
  }
  out_ << '\n';
}

CsvWriter& CsvWriter::row(std::initializer_list<double> values) {
  if (values.size() != columns_) throw std::invalid_argument("CsvWriter: wrong number of cells");
  bool first = true;
  for (double v : values) {
    out_ << (first ? "" : ",") << format_number(v);
    first = false;
  }
  out_ << '\n';
  return *this;
}

CsvWriter& CsvWriter::row(const std::string& first, std::initializer_list<double> rest) {
  if (rest.size() + 1 != columns_) throw std::invalid_argument("CsvWriter: wrong number of cells");
  out_ << first;
  for (double v : rest) out_ << ',' << format_number(v);
  out_ << '\n';
  return *this;
}

CsvWriter& CsvWriter::cells(const std::vector<std::string>& text) {
  if (text.size() != columns_) throw std::invalid_argument("CsvWriter: wrong number of cells");
  for (std::size_t i = 0; i < text.size(); ++i) out_ << (i ? "," : "") << text[i];
  out_ << '\n';
  return *this;
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw std::runtime_error("read_csv: non-numeric cell '" + cell + "' in " + file.string());
      cells.push_back(v);
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace fiberae
