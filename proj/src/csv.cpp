#include "mnri/csv.hpp"

#include "mnri/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace mnri::csv {

namespace {

// Reads one RFC 4180 record; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& cells) {
  cells.clear();
  int c = in.peek();
  if (c == std::char_traits<char>::eof()) return false;

  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;
  bool any = false;
  while (true) {
    c = in.get();
    if (c == std::char_traits<char>::eof()) {
      if (quoted) fail(ErrorCode::DataError, "unterminated quoted CSV field");
      break;
    }
    any = true;
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty() && !field_started_quoted) {
      quoted = true;
      field_started_quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(field));
      field.clear();
      field_started_quoted = false;
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else {
      field.push_back(ch);
    }
  }
  if (!any) return false;
  cells.push_back(std::move(field));
  return true;
}

bool blank(const std::vector<std::string>& cells) {
  return cells.size() == 1 && cells[0].find_first_not_of(" \t") == std::string::npos;
}

}  // namespace

std::size_t Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  fail(ErrorCode::DataError, "missing column '" + std::string(name) + "'");
}

bool Table::has_column(std::string_view name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

std::vector<double> Table::numeric_column(std::string_view name) const {
  const std::size_t j = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string cell = rows[i][j];
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
    if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
      fail(ErrorCode::DataError, "missing value in column '" + std::string(name) + "' at data row " +
                                     std::to_string(i + 1));
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      fail(ErrorCode::DataError, "non-numeric value '" + cell + "' in column '" + std::string(name) +
                                     "' at data row " + std::to_string(i + 1));
    }
    out.push_back(v);
  }
  return out;
}

Table read(std::istream& in) {
  Table t;
  std::vector<std::string> cells;
  bool have_header = false;
  while (read_record(in, cells)) {
    if (!have_header) {
      if (!cells.empty() && !cells[0].empty() && cells[0][0] == '#') {
        std::string line = cells[0].substr(1);
        for (std::size_t i = 1; i < cells.size(); ++i) line += "," + cells[i];
        t.comments.push_back(line);
        continue;
      }
      if (blank(cells)) continue;
      t.header = cells;
      have_header = true;
      continue;
    }
    if (blank(cells)) continue;
    if (cells.size() != t.header.size()) {
      fail(ErrorCode::DataError, "CSV row " + std::to_string(t.rows.size() + 1) + " has " +
                                     std::to_string(cells.size()) + " fields, header has " +
                                     std::to_string(t.header.size()));
    }
    t.rows.push_back(cells);
  }
  if (!have_header) fail(ErrorCode::DataError, "CSV input has no header row");
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::DataError, "cannot open '" + path + "'");
  return read(in);
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\r\n") != std::string::npos) {
      out << '"';
      for (char ch : c) {
        if (ch == '"') out << '"';
        out << ch;
      }
      out << '"';
    } else {
      out << c;
    }
  }
  out << '\n';
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail(ErrorCode::InvalidArgument, "cannot format number");
  return std::string(buf, ptr);
}

}  // namespace mnri::csv
