#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "mdscache/lp.hpp"
#include "mdscache/rng.hpp"

using namespace mdscache;

namespace {

constexpr int kVars = 5;

// One dense inequality a.x >= rhs used by the enumeration oracle.
struct DenseRow {
  std::array<double, kVars> a{};
  double rhs = 0.0;
};

std::vector<DenseRow> dense_constraints(const LinearProgram& lp) {
  std::vector<DenseRow> out;
  for (const auto& row : lp.rows) {
    DenseRow d;
    d.rhs = row.rhs;
    for (const auto& [idx, coef] : row.coeffs) d.a[static_cast<std::size_t>(idx)] = coef;
    out.push_back(d);
  }
  for (int j = 0; j < kVars; ++j) {
    DenseRow lo;
    lo.a[static_cast<std::size_t>(j)] = 1.0;
    lo.rhs = lp.lower[static_cast<std::size_t>(j)];
    out.push_back(lo);
    DenseRow hi;
    hi.a[static_cast<std::size_t>(j)] = -1.0;
    hi.rhs = -lp.upper[static_cast<std::size_t>(j)];
    out.push_back(hi);
  }
  return out;
}

bool gaussian_solve(std::array<std::array<double, kVars>, kVars> a,
                    std::array<double, kVars> b, std::array<double, kVars>& x) {
  for (int col = 0; col < kVars; ++col) {
    int pivot = col;
    for (int r = col + 1; r < kVars; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    if (std::fabs(a[pivot][col]) < 1e-9) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int r = col + 1; r < kVars; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < kVars; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int col = kVars - 1; col >= 0; --col) {
    double s = b[col];
    for (int c = col + 1; c < kVars; ++c) s -= a[col][c] * x[static_cast<std::size_t>(c)];
    x[static_cast<std::size_t>(col)] = s / a[col][col];
  }
  return true;
}

// Brute-force LP oracle: every optimum of a bounded feasible LP sits at a
// vertex, i.e. at the intersection of kVars active constraints. Enumerate
// all candidate active sets, keep feasible intersections, take the best.
double vertex_enumeration_optimum(const LinearProgram& lp, bool& found) {
  const std::vector<DenseRow> cons = dense_constraints(lp);
  const int m = static_cast<int>(cons.size());
  found = false;
  double best = 0.0;

  std::array<int, kVars> pick{};
  const auto consider = [&]() {
    std::array<std::array<double, kVars>, kVars> a{};
    std::array<double, kVars> b{};
    for (int i = 0; i < kVars; ++i) {
      a[i] = cons[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])].a;
      b[i] = cons[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])].rhs;
    }
    std::array<double, kVars> x{};
    if (!gaussian_solve(a, b, x)) return;
    for (const DenseRow& c : cons) {
      double lhs = 0.0;
      for (int j = 0; j < kVars; ++j) lhs += c.a[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
      if (lhs < c.rhs - 1e-7) return;
    }
    double obj = 0.0;
    for (int j = 0; j < kVars; ++j) obj += lp.objective[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    if (!found || obj < best) {
      best = obj;
      found = true;
    }
  };

  for (pick[0] = 0; pick[0] < m; ++pick[0])
    for (pick[1] = pick[0] + 1; pick[1] < m; ++pick[1])
      for (pick[2] = pick[1] + 1; pick[2] < m; ++pick[2])
        for (pick[3] = pick[2] + 1; pick[3] < m; ++pick[3])
          for (pick[4] = pick[3] + 1; pick[4] < m; ++pick[4]) consider();
  return best;
}

// Random bounded LP with a known interior point, so feasibility is certain.
LinearProgram random_bounded_lp(Rng& rng, std::array<double, kVars>& interior) {
  LinearProgram lp;
  lp.num_vars = kVars;
  lp.objective.resize(kVars);
  lp.lower.resize(kVars);
  lp.upper.resize(kVars);
  for (int j = 0; j < kVars; ++j) {
    interior[static_cast<std::size_t>(j)] = rng.uniform(0.0, 1.0);
    lp.objective[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
    lp.lower[static_cast<std::size_t>(j)] = interior[static_cast<std::size_t>(j)] - rng.uniform(0.1, 1.5);
    lp.upper[static_cast<std::size_t>(j)] = interior[static_cast<std::size_t>(j)] + rng.uniform(0.1, 1.5);
  }
  for (int r = 0; r < 8; ++r) {
    LinearProgram::Row row;
    double activity = 0.0;
    for (int j = 0; j < kVars; ++j) {
      const double coef = rng.uniform(-2.0, 2.0);
      row.coeffs.emplace_back(j, coef);
      activity += coef * interior[static_cast<std::size_t>(j)];
    }
    row.rhs = activity - rng.uniform(0.1, 2.0);
    lp.rows.push_back(row);
  }
  return lp;
}

}  // namespace

TEST_CASE("textbook cases") {
  SUBCASE("single variable pushed onto a constraint") {
    LinearProgram lp;
    lp.num_vars = 1;
    lp.objective = {1.0};
    lp.lower = {0.0};
    lp.upper = {10.0};
    lp.rows.push_back({{{0, 1.0}}, 3.0});
    const LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(sol.x[0] == doctest::Approx(3.0).epsilon(1e-10));
  }

  SUBCASE("optimum at a negative box corner") {
    LinearProgram lp;
    lp.num_vars = 2;
    lp.objective = {1.0, 1.0};
    lp.lower = {-2.0, -3.0};
    lp.upper = {5.0, 5.0};
    const LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-5.0).epsilon(1e-10));
  }

  SUBCASE("free variable settles on the constraint") {
    LinearProgram lp;
    lp.num_vars = 1;
    lp.objective = {1.0};
    lp.lower = {-kInf};
    lp.upper = {kInf};
    lp.rows.push_back({{{0, 1.0}}, -3.0});
    const LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-3.0).epsilon(1e-10));
  }

  SUBCASE("conflicting constraints are infeasible") {
    LinearProgram lp;
    lp.num_vars = 1;
    lp.objective = {1.0};
    lp.lower = {0.0};
    lp.upper = {5.0};
    lp.rows.push_back({{{0, 1.0}}, 1.0});    // x >= 1
    lp.rows.push_back({{{0, -1.0}}, 0.0});   // x <= 0
    CHECK(solve_lp(lp).status == LpStatus::Infeasible);
  }

  SUBCASE("missing upper bound lets the objective run away") {
    LinearProgram lp;
    lp.num_vars = 1;
    lp.objective = {-1.0};
    lp.lower = {0.0};
    lp.upper = {kInf};
    CHECK(solve_lp(lp).status == LpStatus::Unbounded);
  }

  SUBCASE("zero-variable degenerate programs") {
    LinearProgram lp;
    CHECK(solve_lp(lp).status == LpStatus::Optimal);
    lp.rows.push_back({{}, 1.0});  // 0 >= 1
    CHECK(solve_lp(lp).status == LpStatus::Infeasible);
  }

  SUBCASE("malformed input is rejected") {
    LinearProgram lp;
    lp.num_vars = 2;
    lp.objective = {1.0};  // wrong size
    lp.lower = {0.0, 0.0};
    lp.upper = {1.0, 1.0};
    CHECK_THROWS_AS(solve_lp(lp), std::invalid_argument);
    lp.objective = {1.0, 1.0};
    lp.rows.push_back({{{7, 1.0}}, 0.0});  // index out of range
    CHECK_THROWS_AS(solve_lp(lp), std::invalid_argument);
  }
}

TEST_CASE("random instances against vertex enumeration") {
  Rng rng(314159);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, kVars> interior{};
    const LinearProgram lp = random_bounded_lp(rng, interior);

    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.max_violation <= 1e-8);

    bool found = false;
    const double oracle = vertex_enumeration_optimum(lp, found);
    REQUIRE(found);
    CHECK(std::fabs(sol.objective - oracle) <= 1e-6 * std::max(1.0, std::fabs(oracle)));

    // The interior point is feasible, so the optimum can be no worse.
    double interior_obj = 0.0;
    for (int j = 0; j < kVars; ++j) interior_obj += lp.objective[static_cast<std::size_t>(j)] * interior[static_cast<std::size_t>(j)];
    CHECK(sol.objective <= interior_obj + 1e-7);
  }
}

TEST_CASE("deterministic resolves") {
  Rng rng(271828);
  std::array<double, kVars> interior{};
  const LinearProgram lp = random_bounded_lp(rng, interior);
  const LpSolution a = solve_lp(lp);
  const LpSolution b = solve_lp(lp);
  CHECK(a.status == b.status);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
  REQUIRE(a.x.size() == b.x.size());
  for (std::size_t j = 0; j < a.x.size(); ++j) CHECK(a.x[j] == b.x[j]);
}

TEST_CASE("iteration limit is reported") {
  LinearProgram lp;
  lp.num_vars = 1;
  lp.objective = {1.0};
  lp.lower = {0.0};
  lp.upper = {10.0};
  lp.rows.push_back({{{0, 1.0}}, 3.0});
  CHECK(solve_lp(lp, 0).status == LpStatus::IterationLimit);
}

TEST_CASE("status names and text dump") {
  CHECK(std::string(to_string(LpStatus::Optimal)) == "optimal");
  CHECK(std::string(to_string(LpStatus::Infeasible)) == "infeasible");
  CHECK(std::string(to_string(LpStatus::Unbounded)) == "unbounded");

  LinearProgram lp;
  lp.num_vars = 2;
  lp.objective = {1.0, -0.5};
  lp.lower = {0.0, -kInf};
  lp.upper = {1.0, kInf};
  lp.rows.push_back({{{0, 1.0}, {1, 2.0}}, 0.25});
  std::ostringstream os;
  write_lp(os, lp);
  const std::string text = os.str();
  CHECK(text.rfind("lp 2 1\n", 0) == 0);
  CHECK(text.find("min ") != std::string::npos);
  CHECK(text.find("row 0.25 0:1 1:2") != std::string::npos);
}
