#pragma once

#include <iosfwd>
#include <vector>

#include "mdscache/cache_model.hpp"
#include "mdscache/lp.hpp"

namespace mdscache {

// The weighted rate in budget units (h / (M omega)) is separable across
// files: sum_i p_i Phi(alpha_i) with Phi convex piecewise-linear. Phi is
// represented by a finite list of (weight, count) terms: one per retained
// Poisson mass point plus one aggregate term standing in for the truncated
// tail at its conditional mean. Both the explicit epigraph LP and the fast
// separable solver are built from this same list, so they optimize the
// identical objective.
struct SeparableObjective {
  struct Term {
    double weight = 0.0;  // q_j, or the tail mass
    double count = 0.0;   // j, or the tail's conditional mean
  };
  struct Segment {
    double lo = 0.0, hi = 0.0, slope = 0.0;  // slope of Phi on [lo, hi]
  };

  double theta = 1.0;
  double n_over_m = 1.0;
  std::vector<Term> terms;
  std::vector<Segment> segments;  // covers [0, 1], breakpoints ascending

  double value(double alpha) const;  // Phi(alpha)
};

SeparableObjective make_separable_objective(const ContactModel& contact, double theta);

// Explicit epigraph form of the relaxed placement problem, in budget units:
//   minimize sum of t variables
//   subject to the two supporting hyperplanes of each max term and the
//   cache budget. Suitable for solve_lp at reference scale.
struct EpigraphProblem {
  LinearProgram lp;
  int num_files = 0;
  long long j_terms = 0;  // epigraph pairs per file, J_max + 1 (+ tail)
  bool has_tail = false;
  double beta = 0.0;
  std::vector<int> alpha_index;            // variable index of alpha_i
  std::vector<std::vector<int>> t_index;   // [file][j]
  std::vector<int> tail_index;             // per-file tail variable or -1
};

EpigraphProblem build_epigraph_lp(const SystemConfig& cfg, const Popularity& pop,
                                  const ContactModel& contact);

// Relaxed (continuous-alpha) problem over box constraints, used directly and
// as the bound computation inside the branch-and-bound. Objective is in
// budget units (no M omega factor).
struct BoxedRelaxation {
  bool feasible = false;
  std::vector<double> alpha;
  double objective = 0.0;
};

BoxedRelaxation solve_relaxed_boxed(const SeparableObjective& phi, const Popularity& pop,
                                    double beta, const std::vector<double>& lower,
                                    const std::vector<double>& upper);

enum class RelaxMethod { Separable, Simplex };

struct RelaxedSolution {
  Allocation alloc;             // continuous alpha vector
  double weighted_rate = 0.0;   // h at the optimum (M omega applied)
};

// Exact solution of the continuous relaxation. The separable method is the
// default; the simplex route solves the explicit epigraph LP and exists as a
// cross-check at small scale.
RelaxedSolution solve_relaxed(const SystemConfig& cfg, const Popularity& pop,
                              const ContactModel& contact,
                              RelaxMethod method = RelaxMethod::Separable);

struct MilpResult {
  Allocation alloc;            // grid-valid optimum
  double weighted_rate = 0.0;  // h(alloc), M omega applied
  double bound = 0.0;          // best proven lower bound on h
  double gap = 0.0;            // (weighted_rate - bound) / max(1, |weighted_rate|)
  long long nodes = 0;
  bool node_limit_hit = false;
};

// Grid-exact optimization by branch-and-bound over contiguous runs of grid
// values, with best-bound node selection. Deterministic. When log is given,
// one line per explored node is emitted (node, bound, incumbent).
MilpResult solve_milp(const SystemConfig& cfg, const Popularity& pop,
                      const ContactModel& contact, double gap_tol = 1e-6,
                      long long node_limit = 500'000, std::ostream* log = nullptr);

// Snap a relaxed allocation down to the grid: alpha -> 1/ceil(1/alpha),
// dropping fractions below 1/n. Never increases any entry, so budget
// feasibility is preserved.
Allocation round_to_integer(const Allocation& relaxed, int code_length);

// At theta = 1/2 and integer budget the popular allocation is optimal.
Allocation theta_half_optimal(const SystemConfig& cfg, const Popularity& pop);

// Closed-form optimal weighted rate for the theta = 1/2, integer-budget case.
double theta_half_rate(const SystemConfig& cfg, const Popularity& pop);

}  // namespace mdscache
