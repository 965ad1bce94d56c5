#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "betamix/errors.hpp"

namespace betamix {

// Rectangular text table with a header row.  Cells stay strings until a
// consumer asks for numbers, so error messages can point at the original
// data row.
class Table {
 public:
  Table() = default;
  Table(std::vector<std::string> columns, std::vector<std::vector<std::string>> rows);

  static Table read_csv(std::istream& in, const std::string& origin);
  static Table read_csv_file(const std::string& path);

  const std::vector<std::string>& columns() const { return columns_; }
  size_t n_rows() const { return rows_.size(); }
  int column_index(const std::string& name) const;  // -1 when absent
  const std::string& cell(size_t row, int col) const;
  // throws DataError naming the 1-based data row on parse failure
  double numeric(size_t row, int col) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
  std::string origin_ = "<memory>";
};

void write_csv(std::ostream& out, const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows);

// shortest decimal text that parses back to exactly the same double
std::string format_double(double x);

}  // namespace betamix
