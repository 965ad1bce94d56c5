#include "betamix/table.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace betamix {

namespace {
std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;   // cell began with a quote; commas are literal until it closes
  bool in_quotes = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"' && cur.empty() && !quoted) {
      quoted = true;
      in_quotes = true;
    } else if (ch == ',') {
      cells.push_back(quoted ? cur : trim(cur));
      cur.clear();
      quoted = false;
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(quoted ? cur : trim(cur));
  return cells;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += '"';
  return out;
}
}  // namespace

Table::Table(std::vector<std::string> columns, std::vector<std::vector<std::string>> rows)
    : columns_(std::move(columns)), rows_(std::move(rows)) {
  for (size_t r = 0; r < rows_.size(); ++r)
    if (rows_[r].size() != columns_.size())
      throw DataError("table: row " + std::to_string(r + 1) + " has " +
                      std::to_string(rows_[r].size()) + " cells, expected " +
                      std::to_string(columns_.size()));
}

Table Table::read_csv(std::istream& in, const std::string& origin) {
  Table t;
  t.origin_ = origin;
  std::string line;
  bool have_header = false;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_row(line);
    if (!have_header) {
      for (const std::string& c : cells)
        if (c.empty())
          throw DataError(origin + ": empty column name in header");
      t.columns_ = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns_.size())
      throw DataError(origin + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(t.columns_.size()));
    t.rows_.push_back(std::move(cells));
  }
  if (!have_header) throw DataError(origin + ": missing header row");
  return t;
}

Table Table::read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return read_csv(in, path);
}

int Table::column_index(const std::string& name) const {
  for (size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i] == name) return static_cast<int>(i);
  return -1;
}

const std::string& Table::cell(size_t row, int col) const {
  return rows_.at(row).at(static_cast<size_t>(col));
}

double Table::numeric(size_t row, int col) const {
  const std::string& s = cell(row, col);
  const char* begin = s.data();
  const char* end = begin + s.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw DataError(origin_ + ": row " + std::to_string(row + 1) + ", column '" +
                    columns_[static_cast<size_t>(col)] + "': '" + s +
                    "' is not a number");
  return value;
}

std::string format_double(double x) {
  // shortest %g form that parses back to the same bits ("10" beats "1e+01")
  char buf[40];
  std::string best;
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    double back = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == x || (std::isnan(back) && std::isnan(x))) {
      if (best.empty() || std::char_traits<char>::length(buf) < best.size()) best = buf;
      if (prec >= 2) break;  // longer precisions only grow the string
    }
  }
  if (!best.empty()) return best;
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(columns[i]);
  }
  out << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(row[i]);
    }
    out << '\n';
  }
}

}  // namespace betamix
