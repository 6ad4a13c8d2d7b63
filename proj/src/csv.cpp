#include "ddimlab/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddimlab {

std::string format_value(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_value(row[i]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_pointset_csv(const std::string& path, const PointSet& ps) {
  const int d = ps.dim();
  std::vector<std::string> header;
  for (int j = 0; j < d; ++j) header.push_back("x" + std::to_string(j));
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(ps.size()));
  for (int i = 0; i < ps.size(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = ps.points.at(i, j);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("bad csv value '" + cell + "' in " + path);
      }
    }
    if (row.size() != table.header.size()) throw std::runtime_error("ragged csv row in " + path);
    table.rows.push_back(std::move(row));
  }
  return table;
}

PointSet read_pointset_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int d = static_cast<int>(table.header.size());
  for (int j = 0; j < d; ++j) {
    if (table.header[static_cast<std::size_t>(j)] != "x" + std::to_string(j)) {
      throw std::runtime_error("pointset csv header mismatch in " + path);
    }
  }
  PointSet ps;
  ps.points = Tensor({static_cast<int>(table.rows.size()), d});
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (int j = 0; j < d; ++j) ps.points.at(static_cast<int>(i), j) = table.rows[i][static_cast<std::size_t>(j)];
  }
  ps.label = path;
  return ps;
}

}  // namespace ddimlab
