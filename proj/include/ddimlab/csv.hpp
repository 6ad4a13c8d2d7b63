#pragma once

#include <string>
#include <vector>

#include "ddimlab/datasets.hpp"
#include "ddimlab/tensor.hpp"

namespace ddimlab {

/// 17-significant-digit decimal; round-trips IEEE doubles exactly.
std::string format_value(double x);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Header x0,x1,..., one point per row.
void write_pointset_csv(const std::string& path, const PointSet& ps);
PointSet read_pointset_csv(const std::string& path);

/// Generic numeric table with a named header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::string& path);

}  // namespace ddimlab
