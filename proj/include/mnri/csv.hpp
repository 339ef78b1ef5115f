#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mnri::csv {

/// Header row plus string cells. Lines beginning with '#' before the header
/// are kept in `comments` (without the leading '#').
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(std::string_view name) const;  // DataError when absent
  bool has_column(std::string_view name) const;
  /// Parses a numeric column; empty cells and NA are DataError.
  std::vector<double> numeric_column(std::string_view name) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

void write_row(std::ostream& out, const std::vector<std::string>& cells);
/// Shortest form that parses back to the same double.
std::string format_double(double v);

}  // namespace mnri::csv
