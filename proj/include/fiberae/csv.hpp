#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace fiberae {

/// Comma-separated table with a single header line. Numbers are written with
/// 17 significant digits so that values round-trip exactly.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, std::initializer_list<std::string> columns);

  CsvWriter& row(std::initializer_list<double> values);
  /// Row whose first cell is preformatted text (labels, integers).
  CsvWriter& row(const std::string& first, std::initializer_list<double> rest);
  CsvWriter& cells(const std::vector<std::string>& text);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

std::string format_number(double v);

/// Data rows of a CSV written by CsvWriter, header skipped.
std::vector<std::vector<double>> read_csv(const std::filesystem::path& file);

}  // namespace fiberae
