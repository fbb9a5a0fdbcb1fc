#include "ssvcqr/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ssvcqr {

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

Vec CsvTable::column(const std::string& name) const {
  const int idx = column_index(name);
  if (idx < 0) throw std::runtime_error("csv: missing column '" + name + "'");
  const auto& col = columns[idx];
  return Eigen::Map<const Vec>(col.data(), static_cast<Eigen::Index>(col.size()));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("csv: empty file '" + path + "'");
  CsvTable table;
  table.header = split_line(line);
  table.columns.resize(table.header.size());

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != table.header.size())
      throw std::runtime_error("csv: row " + std::to_string(lineno) +
                               " has wrong cell count in '" + path + "'");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const char* first = cells[c].data();
      const char* last = first + cells[c].size();
      while (first < last && *first == ' ') ++first;
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last)
        throw std::runtime_error("csv: non-numeric cell '" + cells[c] +
                                 "' at row " + std::to_string(lineno) +
                                 " in '" + path + "'");
      table.columns[c].push_back(v);
    }
  }
  return table;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vec>& columns) {
  if (header.size() != columns.size())
    throw std::invalid_argument("write_csv: header/column mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 == header.size() ? '\n' : ',');
  const Eigen::Index rows = columns.empty() ? 0 : columns[0].size();
  for (Eigen::Index r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << format_double(columns[c][r])
          << (c + 1 == columns.size() ? '\n' : ',');
}

}  // namespace ssvcqr
