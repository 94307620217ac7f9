#include "mdscache/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace mdscache {
namespace {

constexpr double kSnapTol = 1e-11;   // alpha this close to a grid value counts as on it
constexpr double kPruneTol = 1e-12;  // relative slack when pruning against the incumbent

double branch_downlink(double alpha, double count, double theta, double n_over_m) {
  return alpha * ((1.0 - 2.0 * theta) * count - theta * n_over_m) + theta;
}

double branch_d2d(double alpha, double theta, double n_over_m) {
  return (1.0 - theta) * (1.0 - alpha * n_over_m);
}

// Ascending alpha grid {0, 1/n, 1/(n-1), ..., 1} with the matching k values.
struct Grid {
  std::vector<double> value;
  std::vector<int> k;  // k[idx] with k=0 for alpha=0

  explicit Grid(int n) {
    value.reserve(static_cast<std::size_t>(n) + 1);
    k.reserve(static_cast<std::size_t>(n) + 1);
    value.push_back(0.0);
    k.push_back(0);
    for (int kk = n; kk >= 1; --kk) {
      value.push_back(1.0 / static_cast<double>(kk));
      k.push_back(kk);
    }
  }

  int size() const { return static_cast<int>(value.size()); }

  // Largest index whose value is <= v (+ tolerance).
  int floor_index(double v) const {
    int lo = 0, hi = size() - 1;
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      if (value[static_cast<std::size_t>(mid)] <= v + kSnapTol) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    return lo;
  }
};

struct Piece {
  double rate = 0.0;  // objective decrease per unit of budget
  int file = 0;
  int segment = 0;
  double width = 0.0;
};

}  // namespace

double SeparableObjective::value(double alpha) const {
  double sum = 0.0;
  for (const Term& t : terms) {
    sum += t.weight * std::max(branch_downlink(alpha, t.count, theta, n_over_m),
                               branch_d2d(alpha, theta, n_over_m));
  }
  return sum;
}

SeparableObjective make_separable_objective(const ContactModel& contact, double theta) {
  SeparableObjective phi;
  phi.theta = theta;
  phi.n_over_m = contact.caching_fraction;
  phi.terms.reserve(contact.q.size() + 1);
  for (std::size_t j = 0; j < contact.q.size(); ++j) {
    phi.terms.push_back({contact.q[j], static_cast<double>(j)});
  }
  if (contact.tail_mass > 0.0) {
    phi.terms.push_back({contact.tail_mass, contact.tail_mean_count});
  }

  // Phi is a sum of per-term maxima. Sweeping alpha upward from 0, term t
  // switches from the downlink branch to the d2d branch at
  // alpha = 1 / (count_t + n/M); each switch raises the slope, so sorting
  // the switch points yields the convex segment list directly.
  double slope = 0.0;
  for (const auto& t : phi.terms) {
    slope += t.weight * ((1.0 - 2.0 * theta) * t.count - theta * phi.n_over_m);
  }
  std::vector<std::pair<double, double>> switches;  // (alpha, slope delta)
  switches.reserve(phi.terms.size());
  for (const auto& t : phi.terms) {
    const double x = 1.0 / (t.count + phi.n_over_m);
    if (x >= 1.0) continue;  // switch lies beyond alpha = 1
    switches.push_back({x, t.weight * (2.0 * theta - 1.0) * (t.count + phi.n_over_m)});
  }
  std::sort(switches.begin(), switches.end());

  double cursor = 0.0;
  for (const auto& [x, delta] : switches) {
    if (x > cursor) {
      phi.segments.push_back({cursor, x, slope});
      cursor = x;
    }
    slope += delta;
  }
  phi.segments.push_back({cursor, 1.0, slope});
  return phi;
}

EpigraphProblem build_epigraph_lp(const SystemConfig& cfg, const Popularity& pop,
                                  const ContactModel& contact) {
  cfg.validate();
  if (pop.size() != static_cast<std::size_t>(cfg.library_size)) {
    throw std::invalid_argument("popularity size does not match library size");
  }
  const SeparableObjective phi = make_separable_objective(contact, cfg.theta);

  EpigraphProblem prob;
  prob.num_files = cfg.library_size;
  prob.has_tail = contact.tail_mass > 0.0;
  prob.j_terms = static_cast<long long>(contact.q.size());
  prob.beta = cfg.beta();

  const int n_files = prob.num_files;
  const auto n_terms = static_cast<int>(phi.terms.size());
  LinearProgram& lp = prob.lp;
  lp.num_vars = n_files + n_files * n_terms;
  lp.objective.assign(static_cast<std::size_t>(lp.num_vars), 0.0);
  lp.lower.assign(static_cast<std::size_t>(lp.num_vars), 0.0);
  lp.upper.assign(static_cast<std::size_t>(lp.num_vars), kInf);

  prob.alpha_index.resize(static_cast<std::size_t>(n_files));
  prob.t_index.assign(static_cast<std::size_t>(n_files), {});
  prob.tail_index.assign(static_cast<std::size_t>(n_files), -1);

  for (int i = 0; i < n_files; ++i) {
    prob.alpha_index[static_cast<std::size_t>(i)] = i;
    lp.upper[static_cast<std::size_t>(i)] = 1.0;
  }

  LinearProgram::Row budget;
  budget.rhs = -prob.beta;
  budget.coeffs.reserve(static_cast<std::size_t>(n_files));
  for (int i = 0; i < n_files; ++i) budget.coeffs.push_back({i, -1.0});
  lp.rows.push_back(std::move(budget));

  int next = n_files;
  for (int i = 0; i < n_files; ++i) {
    const double pi = pop[static_cast<std::size_t>(i)];
    for (int t = 0; t < n_terms; ++t) {
      const auto& term = phi.terms[static_cast<std::size_t>(t)];
      const int var = next++;
      lp.objective[static_cast<std::size_t>(var)] = 1.0;
      if (prob.has_tail && t == n_terms - 1) {
        prob.tail_index[static_cast<std::size_t>(i)] = var;
      } else {
        prob.t_index[static_cast<std::size_t>(i)].push_back(var);
      }
      const double w = pi * term.weight;
      // t >= w * branch_downlink(alpha) and t >= w * branch_d2d(alpha),
      // written as >= rows.
      lp.rows.push_back(
          {{{var, 1.0},
            {i, w * ((2.0 * cfg.theta - 1.0) * term.count + cfg.theta * phi.n_over_m)}},
           cfg.theta * w});
      lp.rows.push_back(
          {{{var, 1.0}, {i, w * (1.0 - cfg.theta) * phi.n_over_m}}, (1.0 - cfg.theta) * w});
    }
  }
  return prob;
}

BoxedRelaxation solve_relaxed_boxed(const SeparableObjective& phi, const Popularity& pop,
                                    double beta, const std::vector<double>& lower,
                                    const std::vector<double>& upper) {
  const std::size_t n = pop.size();
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("box bound sizes do not match popularity");
  }
  BoxedRelaxation out;
  out.alpha = lower;
  double used = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i] > upper[i] + 1e-15) throw std::invalid_argument("empty box");
    used += lower[i];
  }
  if (used > beta + kBudgetSlack) return out;  // infeasible
  out.feasible = true;
  double budget = std::max(0.0, beta - used);

  // Collect the fillable pieces of every file's cost curve, most valuable
  // first. Convexity makes this greedy exact.
  std::vector<Piece> pieces;
  pieces.reserve(n * phi.segments.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (upper[i] <= lower[i]) continue;
    for (std::size_t s = 0; s < phi.segments.size(); ++s) {
      const auto& seg = phi.segments[s];
      const double lo = std::max(seg.lo, lower[i]);
      const double hi = std::min(seg.hi, upper[i]);
      if (hi <= lo) continue;
      const double rate = pop[i] * -seg.slope;
      if (rate <= 0.0) continue;
      pieces.push_back({rate, static_cast<int>(i), static_cast<int>(s), hi - lo});
    }
  }
  std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
    if (a.rate != b.rate) return a.rate > b.rate;
    if (a.file != b.file) return a.file < b.file;
    return a.segment < b.segment;
  });

  for (const Piece& piece : pieces) {
    if (budget <= 0.0) break;
    const double take = std::min(piece.width, budget);
    out.alpha[static_cast<std::size_t>(piece.file)] += take;
    budget -= take;
  }

  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) obj += pop[i] * phi.value(out.alpha[i]);
  out.objective = obj;
  return out;
}

RelaxedSolution solve_relaxed(const SystemConfig& cfg, const Popularity& pop,
                              const ContactModel& contact, RelaxMethod method) {
  cfg.validate();
  if (pop.size() != static_cast<std::size_t>(cfg.library_size)) {
    throw std::invalid_argument("popularity size does not match library size");
  }
  RelaxedSolution sol;
  const auto n = static_cast<std::size_t>(cfg.library_size);
  if (method == RelaxMethod::Simplex) {
    const EpigraphProblem prob = build_epigraph_lp(cfg, pop, contact);
    const LpSolution lp_sol = solve_lp(prob.lp);
    if (lp_sol.status != LpStatus::Optimal) {
      throw std::runtime_error(std::string("epigraph LP solve failed: ") + to_string(lp_sol.status));
    }
    std::vector<double> alpha(n);
    for (std::size_t i = 0; i < n; ++i) {
      alpha[i] = std::clamp(lp_sol.x[static_cast<std::size_t>(prob.alpha_index[i])], 0.0, 1.0);
    }
    sol.alloc = Allocation::continuous(std::move(alpha));
  } else {
    const SeparableObjective phi = make_separable_objective(contact, cfg.theta);
    const std::vector<double> lower(n, 0.0), upper(n, 1.0);
    BoxedRelaxation boxed = solve_relaxed_boxed(phi, pop, cfg.beta(), lower, upper);
    sol.alloc = Allocation::continuous(std::move(boxed.alpha));
  }
  sol.weighted_rate = weighted_rate_maxform(cfg, pop, contact, sol.alloc);
  return sol;
}

MilpResult solve_milp(const SystemConfig& cfg, const Popularity& pop,
                      const ContactModel& contact, double gap_tol, long long node_limit,
                      std::ostream* log) {
  cfg.validate();
  if (pop.size() != static_cast<std::size_t>(cfg.library_size)) {
    throw std::invalid_argument("popularity size does not match library size");
  }
  if (!(gap_tol >= 0.0)) throw std::invalid_argument("gap tolerance must be nonnegative");

  const auto n_files = static_cast<std::size_t>(cfg.library_size);
  const double beta = cfg.beta();
  const Grid grid(cfg.code_length);
  const SeparableObjective phi = make_separable_objective(contact, cfg.theta);

  struct Node {
    double bound = 0.0;
    long long id = 0;
    std::vector<int> lo, hi;            // inclusive grid index range per file
    std::vector<double> relax_alpha;    // solution of this node's relaxation
  };
  const auto worse = [](const Node& a, const Node& b) {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.id > b.id;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);

  std::vector<int> incumbent_idx;
  double incumbent_obj = kInf;
  long long nodes = 0, next_id = 0;
  bool limit_hit = false;

  const auto solve_node = [&](const std::vector<int>& lo, const std::vector<int>& hi,
                              Node& node) -> bool {
    std::vector<double> lo_a(n_files), hi_a(n_files);
    for (std::size_t i = 0; i < n_files; ++i) {
      lo_a[i] = grid.value[static_cast<std::size_t>(lo[i])];
      hi_a[i] = grid.value[static_cast<std::size_t>(hi[i])];
    }
    BoxedRelaxation relax = solve_relaxed_boxed(phi, pop, beta, lo_a, hi_a);
    if (!relax.feasible) return false;
    node.bound = relax.objective;
    node.relax_alpha = std::move(relax.alpha);
    return true;
  };

  // Round a node's relaxed point down onto the grid (feasible by
  // construction) and offer it as an incumbent.
  const auto offer_rounding = [&](const Node& node) {
    std::vector<int> idx(n_files);
    double obj = 0.0;
    for (std::size_t i = 0; i < n_files; ++i) {
      int g = grid.floor_index(node.relax_alpha[i]);
      g = std::clamp(g, node.lo[i], node.hi[i]);
      idx[i] = g;
      obj += pop[i] * phi.value(grid.value[static_cast<std::size_t>(g)]);
    }
    if (obj < incumbent_obj) {
      incumbent_obj = obj;
      incumbent_idx = std::move(idx);
    }
  };

  Node root;
  root.id = next_id++;
  root.lo.assign(n_files, 0);
  root.hi.assign(n_files, grid.size() - 1);
  if (!solve_node(root.lo, root.hi, root)) {
    throw std::runtime_error("cache placement problem is infeasible (negative budget?)");
  }
  offer_rounding(root);
  open.push(std::move(root));

  double best_open_bound = open.top().bound;
  while (!open.empty()) {
    best_open_bound = open.top().bound;
    const double scale = std::max(1.0, std::fabs(incumbent_obj));
    if (incumbent_obj - best_open_bound <= gap_tol * scale) break;
    if (nodes >= node_limit) {
      limit_hit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    ++nodes;
    if (node.bound >= incumbent_obj - kPruneTol * scale) continue;
    if (log) {
      *log << "node=" << node.id << " bound=" << node.bound
           << " incumbent=" << incumbent_obj << " open=" << open.size() << '\n';
    }

    // Find the most fractional coordinate, measured against its grid gap.
    int branch_file = -1, branch_floor = -1;
    double worst_frac = 0.0;
    for (std::size_t i = 0; i < n_files; ++i) {
      if (node.lo[i] == node.hi[i]) continue;
      const double a = node.relax_alpha[i];
      int fl = std::clamp(grid.floor_index(a), node.lo[i], node.hi[i] - 1);
      const double lo_v = grid.value[static_cast<std::size_t>(fl)];
      const double hi_v = grid.value[static_cast<std::size_t>(fl + 1)];
      const double dist = std::min(a - lo_v, hi_v - a);
      if (dist <= kSnapTol) continue;  // effectively on the grid
      const double frac = dist / (hi_v - lo_v);
      if (frac > worst_frac) {
        worst_frac = frac;
        branch_file = static_cast<int>(i);
        branch_floor = fl;
      }
    }

    if (branch_file < 0) {
      // Every coordinate sits on the grid; the rounding offer is the node
      // itself, and there is nothing left to branch on.
      offer_rounding(node);
      continue;
    }

    for (int side = 0; side < 2; ++side) {
      Node child;
      child.id = next_id++;
      child.lo = node.lo;
      child.hi = node.hi;
      if (side == 0) {
        child.hi[static_cast<std::size_t>(branch_file)] = branch_floor;
      } else {
        child.lo[static_cast<std::size_t>(branch_file)] = branch_floor + 1;
      }
      if (!solve_node(child.lo, child.hi, child)) continue;
      if (child.bound >= incumbent_obj - kPruneTol * std::max(1.0, std::fabs(incumbent_obj))) {
        continue;
      }
      offer_rounding(child);
      open.push(std::move(child));
    }
  }

  if (incumbent_idx.empty()) throw std::runtime_error("branch-and-bound found no incumbent");

  std::vector<int> k(n_files);
  for (std::size_t i = 0; i < n_files; ++i) {
    k[i] = grid.k[static_cast<std::size_t>(incumbent_idx[i])];
  }
  MilpResult result;
  result.alloc = Allocation::from_k(std::move(k), cfg.code_length);
  result.weighted_rate = weighted_rate_maxform(cfg, pop, contact, result.alloc);
  const double scale_rate = cfg.system_request_rate();
  const double bound_scaled = open.empty() && !limit_hit ? incumbent_obj : best_open_bound;
  result.bound = scale_rate * std::min(bound_scaled, incumbent_obj);
  result.gap = std::max(0.0, (result.weighted_rate - result.bound) /
                                 std::max(1.0, std::fabs(result.weighted_rate)));
  result.nodes = nodes;
  result.node_limit_hit = limit_hit;
  return result;
}

Allocation round_to_integer(const Allocation& relaxed, int code_length) {
  if (code_length < 1) throw std::invalid_argument("code length must be at least 1");
  std::vector<int> k(relaxed.size(), 0);
  for (std::size_t i = 0; i < relaxed.size(); ++i) {
    const double a = relaxed.alpha[i];
    if (a <= 1e-15) continue;
    // The 1e-9 nudge keeps 1/(1/k) round trips from bumping k by one; a
    // genuine mid-segment value is never within 1e-9 of an integer reciprocal
    // boundary in any way that matters.
    auto kk = static_cast<long long>(std::ceil(1.0 / a - 1e-9));
    if (kk < 1) kk = 1;
    if (kk > code_length) continue;  // fraction too small to help, drop it
    k[i] = static_cast<int>(kk);
  }
  return Allocation::from_k(std::move(k), code_length);
}

Allocation theta_half_optimal(const SystemConfig& cfg, const Popularity& pop) {
  cfg.validate();
  if (std::fabs(cfg.theta - 0.5) > 1e-12) {
    throw std::invalid_argument("closed-form optimum requires theta = 1/2");
  }
  const double beta = cfg.beta();
  if (std::fabs(beta - std::round(beta)) > kBudgetSlack) {
    throw std::invalid_argument("closed-form optimum requires an integer budget");
  }
  if (std::llround(beta) > cfg.library_size) {
    throw std::invalid_argument("budget floor(beta) exceeds library size");
  }
  (void)pop;
  return popular_allocation(cfg.library_size, beta);
}

double theta_half_rate(const SystemConfig& cfg, const Popularity& pop) {
  const double beta = cfg.beta();
  const auto count = std::llround(beta);
  double head = 0.0;
  for (long long i = 0; i < count && i < cfg.library_size; ++i) {
    head += pop[static_cast<std::size_t>(i)];
  }
  const double n_over_m = static_cast<double>(cfg.code_length) / cfg.num_devices;
  return cfg.system_request_rate() * 0.5 * (1.0 - n_over_m * head);
}

}  // namespace mdscache
