#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace mdscache {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Sparse linear program
//     minimize    c^T x
//     subject to  row . x >= rhs   for every row
//                 lower <= x <= upper   (entries may be +-inf)
struct LinearProgram {
  struct Row {
    std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
    double rhs = 0.0;
  };

  int num_vars = 0;
  std::vector<double> objective;
  std::vector<Row> rows;
  std::vector<double> lower;
  std::vector<double> upper;

  void validate() const;  // throws std::invalid_argument on malformed input
};

enum class LpStatus {
  Optimal,
  Infeasible,
  Unbounded,
  IterationLimit,   // best feasible point found so far is returned
  NumericalFailure,
};

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  std::vector<double> x;
  double objective = 0.0;
  // Largest constraint/bound violation of x, each row scaled by its largest
  // coefficient magnitude. Optimal guarantees this is at most 1e-6; on
  // well-conditioned problems it is typically below 1e-10.
  double max_violation = 0.0;
  long long iterations = 0;
};

// Dense two-phase primal simplex with Bland's rule (anti-cycling) and row
// equilibration. Deterministic: identical inputs give identical outputs.
// Intended for reference-scale problems, not production LP sizes.
LpSolution solve_lp(const LinearProgram& lp, long long iteration_limit = 2'000'000);

// Plain-text dump, one item per line:
//   lp <num_vars> <num_rows>
//   min <c_0> ... <c_{n-1}>
//   bnd <lower_i> <upper_i>          (one line per variable, inf/-inf spelled out)
//   row <rhs> <idx>:<coef> ...       (one line per constraint, meaning row.x >= rhs)
void write_lp(std::ostream& os, const LinearProgram& lp);

}  // namespace mdscache
