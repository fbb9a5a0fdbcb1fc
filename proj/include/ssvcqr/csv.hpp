#pragma once

#include "ssvcqr/types.hpp"

#include <string>
#include <vector>

namespace ssvcqr {

/// Header-row CSV with numeric cells ('.' decimal, comma separated).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major, header order

  int rows() const {
    return columns.empty() ? 0 : static_cast<int>(columns[0].size());
  }
  int column_index(const std::string& name) const;  // -1 when absent

  /// Column by name; throws std::runtime_error when missing.
  Vec column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

/// Writes doubles with round-trip precision so re-reading is bitwise exact.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vec>& columns);

std::string format_double(double v);

}  // namespace ssvcqr
