#include "mdscache/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mdscache {
namespace {

// Tableau entries at or below this are treated as non-blocking noise: they are
// never chosen as pivots and never limit the step length. Pivoting on such an
// entry amplifies its row by ~1/kPivotTol and corrupts the tableau; skipping it
// instead lets the row be overshot by at most kPivotTol per unit step, which
// kFeasTol absorbs.
constexpr double kPivotTol = 1e-7;
constexpr double kCostTol = 1e-9;
constexpr double kRatioTie = 1e-9;     // Harris window around the minimum ratio
constexpr long long kDegenerateStreak = 512;  // pivots without progress before Bland
// A returned point is declared optimal when no scaled row or bound is violated
// by more than this.
constexpr double kFeasTol = 1e-6;

// In-place geometric-mean equilibration with power-of-two factors, so scaling
// introduces no rounding. Returns per-column factors F with
// x_original = x_scaled / F. Without this, problems mixing O(1) rows with
// rows many orders smaller leave tableau entries the pivot tolerance cannot
// tell apart from noise.
std::vector<double> equilibrate(LinearProgram& lp) {
  std::vector<double> factor(static_cast<std::size_t>(lp.num_vars), 1.0);
  if (lp.rows.empty()) return factor;
  const auto mean_pow2 = [](double lo, double hi) {
    const double f = std::exp2(std::round(std::log2(lo * hi) / 2.0));
    return (f > 0.0 && std::isfinite(f)) ? f : 1.0;
  };
  for (int pass = 0; pass < 3; ++pass) {
    for (auto& row : lp.rows) {
      double lo = kInf;
      double hi = 0.0;
      for (const auto& [idx, coef] : row.coeffs) {
        const double a = std::fabs(coef);
        if (a == 0.0) continue;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
      }
      if (hi == 0.0) continue;
      const double f = mean_pow2(lo, hi);
      if (f == 1.0) continue;
      for (auto& [idx, coef] : row.coeffs) coef /= f;
      row.rhs /= f;
    }
    std::vector<double> lo(factor.size(), kInf);
    std::vector<double> hi(factor.size(), 0.0);
    for (const auto& row : lp.rows) {
      for (const auto& [idx, coef] : row.coeffs) {
        const double a = std::fabs(coef);
        if (a == 0.0) continue;
        const auto j = static_cast<std::size_t>(idx);
        lo[j] = std::min(lo[j], a);
        hi[j] = std::max(hi[j], a);
      }
    }
    std::vector<double> col(factor.size(), 1.0);
    for (std::size_t j = 0; j < factor.size(); ++j) {
      if (hi[j] == 0.0) continue;
      col[j] = mean_pow2(lo[j], hi[j]);
      factor[j] *= col[j];
    }
    for (auto& row : lp.rows) {
      for (auto& [idx, coef] : row.coeffs) coef /= col[static_cast<std::size_t>(idx)];
    }
  }
  for (std::size_t j = 0; j < factor.size(); ++j) {
    lp.lower[j] *= factor[j];
    lp.upper[j] *= factor[j];
    lp.objective[j] /= factor[j];
  }
  return factor;
}

// Equality-form problem assembled from a LinearProgram:
//   A y = b, y >= 0, minimize over structural columns.
// Structural columns come first, then surplus/slack columns, then artificials.
struct Standardized {
  std::vector<std::vector<double>> a;  // m rows, each of width num_cols
  std::vector<double> b;               // m entries, all >= 0
  std::vector<double> cost;            // phase-2 cost per column
  std::vector<int> basis;              // basic column per row
  int num_cols = 0;
  int first_artificial = 0;  // columns >= this are artificial

  // x_orig[i] = base[i] + sum over owned columns of sign * y_col
  std::vector<double> base;
  std::vector<std::vector<std::pair<int, double>>> var_cols;  // per original var
};

double checked(double v, const char* what) {
  if (std::isnan(v)) throw std::invalid_argument(std::string("NaN in ") + what);
  return v;
}

Standardized standardize(const LinearProgram& lp) {
  const int n = lp.num_vars;
  Standardized std_p;
  std_p.base.assign(static_cast<std::size_t>(n), 0.0);
  std_p.var_cols.resize(static_cast<std::size_t>(n));

  // Presolve: a row whose smallest achievable activity already sits at (or
  // negligibly below) its right-hand side can never be meaningfully violated
  // within the variable bounds, so it is dropped. Such rows show up as
  // numerically vacuous epigraph cuts and would otherwise offer junk pivots.
  std::vector<char> keep(lp.rows.size(), 1);
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    double lo_activity = 0.0;
    bool bounded = true;
    for (const auto& [idx, coef] : lp.rows[r].coeffs) {
      const double bound = coef > 0.0 ? lp.lower[static_cast<std::size_t>(idx)]
                                      : lp.upper[static_cast<std::size_t>(idx)];
      if (!std::isfinite(bound)) {
        if (coef != 0.0) bounded = false;
        continue;
      }
      lo_activity += coef * bound;
    }
    if (bounded && lo_activity >= lp.rows[r].rhs - 1e-8 * (1.0 + std::fabs(lp.rows[r].rhs))) {
      keep[r] = 0;
    }
  }

  // Row equilibration on the kept rows: scale each by its largest absolute
  // coefficient so pivot tolerances mean the same thing everywhere.
  std::vector<double> row_scale(lp.rows.size(), 1.0);
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    double biggest = 0.0;
    for (const auto& [idx, coef] : lp.rows[r].coeffs) biggest = std::max(biggest, std::fabs(coef));
    if (biggest > 0.0) row_scale[r] = 1.0 / biggest;
  }

  // Variable transformation to y >= 0.
  int next_col = 0;
  std::vector<std::pair<int, double>> ub_rows;  // (structural column, width)
  for (int i = 0; i < n; ++i) {
    const double lo = lp.lower[static_cast<std::size_t>(i)];
    const double hi = lp.upper[static_cast<std::size_t>(i)];
    auto& cols = std_p.var_cols[static_cast<std::size_t>(i)];
    if (lo > -kInf) {
      std_p.base[static_cast<std::size_t>(i)] = lo;
      cols.push_back({next_col++, 1.0});
      if (hi < kInf) ub_rows.push_back({cols.back().first, hi - lo});
    } else if (hi < kInf) {
      std_p.base[static_cast<std::size_t>(i)] = hi;
      cols.push_back({next_col++, -1.0});
    } else {
      cols.push_back({next_col++, 1.0});
      cols.push_back({next_col++, -1.0});
    }
  }
  const int num_struct = next_col;
  int kept_rows = 0;
  for (char k : keep) kept_rows += k;
  const int num_rows = kept_rows + static_cast<int>(ub_rows.size());
  const int num_surplus = num_rows;  // one surplus/slack per row
  // Worst case every original row needs an artificial; allocate lazily below.

  std_p.a.assign(static_cast<std::size_t>(num_rows), {});
  std_p.b.assign(static_cast<std::size_t>(num_rows), 0.0);
  std_p.basis.assign(static_cast<std::size_t>(num_rows), -1);

  std::vector<std::vector<double>> dense(static_cast<std::size_t>(num_rows),
                                         std::vector<double>(static_cast<std::size_t>(num_struct + num_surplus), 0.0));

  int row = 0;
  std::vector<int> needs_artificial;
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    if (!keep[r]) continue;
    auto& a = dense[static_cast<std::size_t>(row)];
    double rhs = lp.rows[r].rhs * row_scale[r];
    for (const auto& [idx, coef] : lp.rows[r].coeffs) {
      const double scaled = coef * row_scale[r];
      rhs -= scaled * std_p.base[static_cast<std::size_t>(idx)];
      for (const auto& [col, sign] : std_p.var_cols[static_cast<std::size_t>(idx)]) {
        a[static_cast<std::size_t>(col)] += scaled * sign;
      }
    }
    // row . y - s = rhs; flip sign so the right-hand side is nonnegative.
    const int surplus = num_struct + row;
    if (rhs < 0.0) {
      for (double& v : a) v = -v;
      a[static_cast<std::size_t>(surplus)] = 1.0;
      std_p.b[static_cast<std::size_t>(row)] = -rhs;
      std_p.basis[static_cast<std::size_t>(row)] = surplus;
    } else {
      a[static_cast<std::size_t>(surplus)] = -1.0;
      std_p.b[static_cast<std::size_t>(row)] = rhs;
      needs_artificial.push_back(row);
    }
    ++row;
  }
  for (const auto& [col, width] : ub_rows) {
    auto& a = dense[static_cast<std::size_t>(row)];
    a[static_cast<std::size_t>(col)] = 1.0;
    const int slack = num_struct + row;
    a[static_cast<std::size_t>(slack)] = 1.0;
    std_p.b[static_cast<std::size_t>(row)] = width;
    std_p.basis[static_cast<std::size_t>(row)] = slack;
    ++row;
  }

  std_p.first_artificial = num_struct + num_surplus;
  std_p.num_cols = std_p.first_artificial + static_cast<int>(needs_artificial.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    dense[i].resize(static_cast<std::size_t>(std_p.num_cols), 0.0);
  }
  for (std::size_t i = 0; i < needs_artificial.size(); ++i) {
    const int r = needs_artificial[i];
    const int col = std_p.first_artificial + static_cast<int>(i);
    dense[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] = 1.0;
    std_p.basis[static_cast<std::size_t>(r)] = col;
  }
  std_p.a = std::move(dense);

  std_p.cost.assign(static_cast<std::size_t>(std_p.num_cols), 0.0);
  for (int i = 0; i < n; ++i) {
    for (const auto& [col, sign] : std_p.var_cols[static_cast<std::size_t>(i)]) {
      std_p.cost[static_cast<std::size_t>(col)] += lp.objective[static_cast<std::size_t>(i)] * sign;
    }
  }
  return std_p;
}

// One simplex phase with Bland's rule on the given cost vector.
// Returns false when the phase hit the iteration limit.
enum class PhaseResult { Done, Unbounded, IterationLimit };

PhaseResult run_phase(Standardized& p, const std::vector<double>& cost, int max_enterable,
                      long long iteration_limit, long long& iterations) {
  const int m = static_cast<int>(p.a.size());
  // Reduced costs maintained as an explicit row.
  std::vector<double> red(cost.begin(), cost.end());
  for (int r = 0; r < m; ++r) {
    const double cb = cost[static_cast<std::size_t>(p.basis[static_cast<std::size_t>(r)])];
    if (cb == 0.0) continue;
    const auto& a = p.a[static_cast<std::size_t>(r)];
    for (int j = 0; j < p.num_cols; ++j) red[static_cast<std::size_t>(j)] -= cb * a[static_cast<std::size_t>(j)];
  }

  long long no_progress = 0;  // consecutive degenerate pivots
  for (;;) {
    if (iterations >= iteration_limit) return PhaseResult::IterationLimit;

    // Entering rule is Bland's (lowest-index improving column), skipping
    // columns that offer no trustworthy pivot. The leaving row comes from a
    // two-pass ratio test: pass one finds the minimum ratio over rows with a
    // significant pivot entry, pass two picks the numerically largest pivot
    // inside a small window around that minimum. After a long degenerate
    // streak the tie-break reverts to Bland's smallest-basic-index rule,
    // whose anti-cycling guarantee ends the stall.
    const bool bland_break = no_progress >= kDegenerateStreak;
    int enter = -1, leave = -1;
    double best_ratio = kInf;
    bool any_improving = false;
    for (int j = 0; j < max_enterable && leave < 0; ++j) {
      if (red[static_cast<std::size_t>(j)] >= -kCostTol) continue;
      any_improving = true;
      best_ratio = kInf;
      bool any_positive = false;
      for (int r = 0; r < m; ++r) {
        const double a = p.a[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
        if (a <= 0.0) continue;
        any_positive = true;
        if (a <= kPivotTol) continue;
        const double ratio = std::max(p.b[static_cast<std::size_t>(r)], 0.0) / a;
        if (ratio < best_ratio) best_ratio = ratio;
      }
      if (best_ratio == kInf) {
        if (!any_positive) return PhaseResult::Unbounded;
        continue;  // only junk pivots in this column; try the next one
      }
      double best_piv = 0.0;
      const double window = best_ratio + kRatioTie * (1.0 + best_ratio);
      for (int r = 0; r < m; ++r) {
        const double a = p.a[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
        if (a <= kPivotTol) continue;
        const double ratio = std::max(p.b[static_cast<std::size_t>(r)], 0.0) / a;
        if (ratio > window) continue;
        if (bland_break) {
          if (leave < 0 || p.basis[static_cast<std::size_t>(r)] < p.basis[static_cast<std::size_t>(leave)]) {
            leave = r;
          }
        } else if (a > best_piv) {
          best_piv = a;
          leave = r;
        }
      }
      if (leave >= 0) enter = j;
    }
    if (!any_improving) return PhaseResult::Done;
    if (leave < 0) return PhaseResult::IterationLimit;  // improving columns exist, pivots do not
    no_progress = best_ratio > 1e-12 ? 0 : no_progress + 1;

    // Pivot.
    ++iterations;
    auto& piv_row = p.a[static_cast<std::size_t>(leave)];
    const double piv = piv_row[static_cast<std::size_t>(enter)];
    for (double& v : piv_row) v /= piv;
    p.b[static_cast<std::size_t>(leave)] /= piv;
    for (int r = 0; r < m; ++r) {
      if (r == leave) continue;
      auto& a = p.a[static_cast<std::size_t>(r)];
      const double f = a[static_cast<std::size_t>(enter)];
      if (f == 0.0) continue;
      for (int j = 0; j < p.num_cols; ++j) {
        a[static_cast<std::size_t>(j)] -= f * piv_row[static_cast<std::size_t>(j)];
      }
      a[static_cast<std::size_t>(enter)] = 0.0;
      p.b[static_cast<std::size_t>(r)] -= f * p.b[static_cast<std::size_t>(leave)];
      if (p.b[static_cast<std::size_t>(r)] < 0.0 && p.b[static_cast<std::size_t>(r)] > -1e-11) {
        p.b[static_cast<std::size_t>(r)] = 0.0;
      }
    }
    const double f = red[static_cast<std::size_t>(enter)];
    if (f != 0.0) {
      for (int j = 0; j < p.num_cols; ++j) {
        red[static_cast<std::size_t>(j)] -= f * piv_row[static_cast<std::size_t>(j)];
      }
      red[static_cast<std::size_t>(enter)] = 0.0;
    }
    p.basis[static_cast<std::size_t>(leave)] = enter;
  }
}

std::vector<double> extract_x(const Standardized& p, int num_vars) {
  std::vector<double> y(static_cast<std::size_t>(p.num_cols), 0.0);
  for (std::size_t r = 0; r < p.a.size(); ++r) {
    y[static_cast<std::size_t>(p.basis[r])] = p.b[r];
  }
  std::vector<double> x(p.base.begin(), p.base.end());
  for (int i = 0; i < num_vars; ++i) {
    for (const auto& [col, sign] : p.var_cols[static_cast<std::size_t>(i)]) {
      x[static_cast<std::size_t>(i)] += sign * y[static_cast<std::size_t>(col)];
    }
  }
  return x;
}

double measure_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (int i = 0; i < lp.num_vars; ++i) {
    worst = std::max(worst, lp.lower[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]);
    worst = std::max(worst, x[static_cast<std::size_t>(i)] - lp.upper[static_cast<std::size_t>(i)]);
  }
  for (const auto& row : lp.rows) {
    double lhs = 0.0;
    double biggest = 1.0;
    for (const auto& [idx, coef] : row.coeffs) {
      lhs += coef * x[static_cast<std::size_t>(idx)];
      biggest = std::max(biggest, std::fabs(coef));
    }
    worst = std::max(worst, (row.rhs - lhs) / biggest);
  }
  return worst;
}

double objective_value(const LinearProgram& lp, const std::vector<double>& x) {
  double obj = 0.0;
  for (int i = 0; i < lp.num_vars; ++i) {
    obj += lp.objective[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
  }
  return obj;
}

}  // namespace

void LinearProgram::validate() const {
  if (num_vars < 0) throw std::invalid_argument("negative variable count");
  const auto n = static_cast<std::size_t>(num_vars);
  if (objective.size() != n || lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("objective/bound sizes do not match num_vars");
  }
  for (std::size_t i = 0; i < n; ++i) {
    checked(objective[i], "objective");
    if (checked(lower[i], "bounds") > checked(upper[i], "bounds")) {
      throw std::invalid_argument("lower bound exceeds upper bound");
    }
  }
  for (const auto& row : rows) {
    checked(row.rhs, "rhs");
    for (const auto& [idx, coef] : row.coeffs) {
      checked(coef, "row coefficient");
      if (idx < 0 || idx >= num_vars) throw std::invalid_argument("row index out of range");
    }
  }
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
    case LpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

LpSolution solve_lp(const LinearProgram& lp, long long iteration_limit) {
  lp.validate();
  LpSolution sol;
  if (lp.num_vars == 0) {
    sol.status = lp.rows.empty() ? LpStatus::Optimal : LpStatus::Infeasible;
    for (const auto& row : lp.rows) {
      if (row.rhs <= 0.0) continue;
      return sol;  // 0 >= positive rhs is unsatisfiable
    }
    sol.status = LpStatus::Optimal;
    return sol;
  }

  LinearProgram scaled = lp;
  const std::vector<double> col_factor = equilibrate(scaled);
  Standardized p = standardize(scaled);
  long long iterations = 0;

  // Phase 1: drive the artificials to zero.
  if (p.num_cols > p.first_artificial) {
    std::vector<double> phase1_cost(static_cast<std::size_t>(p.num_cols), 0.0);
    for (int j = p.first_artificial; j < p.num_cols; ++j) phase1_cost[static_cast<std::size_t>(j)] = 1.0;
    const PhaseResult res = run_phase(p, phase1_cost, p.num_cols, iteration_limit, iterations);
    sol.iterations = iterations;
    if (res == PhaseResult::IterationLimit) {
      sol.status = LpStatus::IterationLimit;  // no feasible point reached
      return sol;
    }
    double infeas = 0.0;
    for (std::size_t r = 0; r < p.a.size(); ++r) {
      if (p.basis[r] >= p.first_artificial) infeas += p.b[r];
    }
    if (infeas > 1e-7) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    // Pivot leftover (degenerate) artificials out of the basis when possible.
    for (std::size_t r = 0; r < p.a.size(); ++r) {
      if (p.basis[r] < p.first_artificial) continue;
      int enter = -1;
      double best = kPivotTol;
      for (int j = 0; j < p.first_artificial; ++j) {
        const double mag = std::fabs(p.a[r][static_cast<std::size_t>(j)]);
        if (mag > best) {
          best = mag;
          enter = j;
        }
      }
      if (enter < 0) {
        // Redundant constraint: blank the row so it can never bind again.
        std::fill(p.a[r].begin(), p.a[r].end(), 0.0);
        p.b[r] = 0.0;
        continue;
      }
      const double piv = p.a[r][static_cast<std::size_t>(enter)];
      for (double& v : p.a[r]) v /= piv;
      p.b[r] /= piv;
      for (std::size_t r2 = 0; r2 < p.a.size(); ++r2) {
        if (r2 == r) continue;
        const double f = p.a[r2][static_cast<std::size_t>(enter)];
        if (f == 0.0) continue;
        for (int j = 0; j < p.num_cols; ++j) {
          p.a[r2][static_cast<std::size_t>(j)] -= f * p.a[r][static_cast<std::size_t>(j)];
        }
        p.a[r2][static_cast<std::size_t>(enter)] = 0.0;
        p.b[r2] -= f * p.b[r];
      }
      p.basis[r] = enter;
    }
  }

  // Phase 2 on the real objective; artificial columns may not re-enter.
  const PhaseResult res = run_phase(p, p.cost, p.first_artificial, iteration_limit, iterations);
  sol.iterations = iterations;
  sol.x = extract_x(p, lp.num_vars);
  for (int j = 0; j < lp.num_vars; ++j) {
    sol.x[static_cast<std::size_t>(j)] /= col_factor[static_cast<std::size_t>(j)];
  }
  sol.objective = objective_value(lp, sol.x);
  sol.max_violation = measure_violation(lp, sol.x);
  if (res == PhaseResult::Unbounded) {
    sol.status = LpStatus::Unbounded;
  } else if (res == PhaseResult::IterationLimit) {
    sol.status = LpStatus::IterationLimit;
  } else {
    sol.status = sol.max_violation <= kFeasTol ? LpStatus::Optimal : LpStatus::NumericalFailure;
  }
  return sol;
}

void write_lp(std::ostream& os, const LinearProgram& lp) {
  const auto put = [&os](double v) {
    if (v == kInf) {
      os << "inf";
    } else if (v == -kInf) {
      os << "-inf";
    } else {
      os << v;
    }
  };
  os.precision(17);
  os << "lp " << lp.num_vars << ' ' << lp.rows.size() << '\n';
  os << "min";
  for (double c : lp.objective) {
    os << ' ';
    put(c);
  }
  os << '\n';
  for (int i = 0; i < lp.num_vars; ++i) {
    os << "bnd ";
    put(lp.lower[static_cast<std::size_t>(i)]);
    os << ' ';
    put(lp.upper[static_cast<std::size_t>(i)]);
    os << '\n';
  }
  for (const auto& row : lp.rows) {
    os << "row ";
    put(row.rhs);
    for (const auto& [idx, coef] : row.coeffs) {
      os << ' ' << idx << ':';
      put(coef);
    }
    os << '\n';
  }
}

}  // namespace mdscache
