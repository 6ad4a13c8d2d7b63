#pragma once

#include <string>
#include <vector>

namespace ddimlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;   // measured value vs bound
  double seconds = 0.0;
};

struct AcceptOptions {
  std::string out_dir = "out/accept";
  int workers = 1;
  /// Empty runs everything; otherwise the listed criterion ids.
  std::vector<int> only;
};

/// Runs the pinned-seed verification suite; every criterion is attempted
/// even after failures.
std::vector<CriterionResult> run_acceptance(const AcceptOptions& opt);

/// Prints one line per criterion, writes the summary table, returns 0 when
/// everything passed and 1 otherwise.
int cmd_accept(const AcceptOptions& opt);

}  // namespace ddimlab
