#include "wmlab/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wmlab {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-8;

struct Tableau {
  std::size_t nrows, ncols;  // ncols excludes the rhs column
  std::vector<std::vector<double>> t;  // nrows x (ncols + 1)
  std::vector<std::size_t> basis;      // basic column per row
  std::vector<double> obj;             // reduced cost row, obj[ncols] = -value

  void pivot(std::size_t pr, std::size_t pc) {
    double piv = t[pr][pc];
    for (double& v : t[pr]) v /= piv;
    for (std::size_t i = 0; i < nrows; ++i) {
      if (i == pr) continue;
      double f = t[i][pc];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= ncols; ++j) t[i][j] -= f * t[pr][j];
    }
    double f = obj[pc];
    if (f != 0.0)
      for (std::size_t j = 0; j <= ncols; ++j) obj[j] -= f * t[pr][j];
    basis[pr] = pc;
  }

  // Bland's rule: entering = smallest eligible index, leaving = min ratio with
  // smallest basic index on ties. Returns false when optimal.
  bool step(std::size_t allowed_cols) {
    std::size_t enter = ncols;
    for (std::size_t j = 0; j < allowed_cols; ++j) {
      if (obj[j] < -kPivotTol) { enter = j; break; }
    }
    if (enter == ncols) return false;
    std::size_t leave = nrows;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nrows; ++i) {
      if (t[i][enter] > kPivotTol) {
        double ratio = t[i][ncols] / t[i][enter];
        if (ratio < best - 1e-12 ||
            (ratio < best + 1e-12 && (leave == nrows || basis[i] < basis[leave]))) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave == nrows) throw std::runtime_error("simplex: unbounded");
    pivot(leave, enter);
    return true;
  }

  void set_objective(const std::vector<double>& c) {
    obj.assign(ncols + 1, 0.0);
    for (std::size_t j = 0; j < c.size() && j < ncols; ++j) obj[j] = c[j];
    for (std::size_t i = 0; i < nrows; ++i) {
      double cb = basis[i] < c.size() ? c[basis[i]] : 0.0;
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= ncols; ++j) obj[j] -= cb * t[i][j];
    }
  }
};

}  // namespace

LpSolution solve_lp(const LpProblem& lp) {
  const std::size_t n = lp.num_vars;
  const std::size_t m = lp.rows.size();
  for (const LpRow& r : lp.rows)
    if (r.a.size() != n) throw std::invalid_argument("solve_lp: row width mismatch");
  if (lp.objective.size() != n) throw std::invalid_argument("solve_lp: objective width mismatch");

  // Normalize so every rhs is nonnegative, then count slack/artificial columns.
  std::vector<std::vector<double>> a(m, std::vector<double>(n));
  std::vector<double> b(m);
  std::vector<LpSense> sense(m);
  for (std::size_t i = 0; i < m; ++i) {
    double flip = lp.rows[i].rhs < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) a[i][j] = flip * lp.rows[i].a[j];
    b[i] = flip * lp.rows[i].rhs;
    sense[i] = lp.rows[i].sense;
    if (flip < 0.0) {
      if (sense[i] == LpSense::le) sense[i] = LpSense::ge;
      else if (sense[i] == LpSense::ge) sense[i] = LpSense::le;
    }
  }

  std::size_t nslack = 0, nart = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (sense[i] != LpSense::eq) ++nslack;
    if (sense[i] != LpSense::le) ++nart;
  }

  Tableau tab;
  tab.nrows = m;
  tab.ncols = n + nslack + nart;
  tab.t.assign(m, std::vector<double>(tab.ncols + 1, 0.0));
  tab.basis.assign(m, 0);

  std::size_t slack_at = n, art_at = n + nslack;
  const std::size_t art_begin = n + nslack;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) tab.t[i][j] = a[i][j];
    tab.t[i][tab.ncols] = b[i];
    if (sense[i] == LpSense::le) {
      tab.t[i][slack_at] = 1.0;
      tab.basis[i] = slack_at++;
    } else if (sense[i] == LpSense::ge) {
      tab.t[i][slack_at++] = -1.0;
      tab.t[i][art_at] = 1.0;
      tab.basis[i] = art_at++;
    } else {
      tab.t[i][art_at] = 1.0;
      tab.basis[i] = art_at++;
    }
  }

  // Phase 1: drive artificial variables to zero.
  if (nart > 0) {
    std::vector<double> c1(tab.ncols, 0.0);
    for (std::size_t j = art_begin; j < tab.ncols; ++j) c1[j] = 1.0;
    tab.set_objective(c1);
    while (tab.step(tab.ncols)) {}
    double phase1 = -tab.obj[tab.ncols];
    if (phase1 > kFeasTol)
      return {LpStatus::infeasible, 1.0, {}};
    // Pivot lingering artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis[i] < art_begin) continue;
      for (std::size_t j = 0; j < art_begin; ++j) {
        if (std::fabs(tab.t[i][j]) > kPivotTol) {
          tab.pivot(i, j);
          break;
        }
      }
      // A row still basic in an artificial is redundant; it stays at zero.
    }
  }

  // Phase 2 over the original objective, artificial columns barred.
  tab.set_objective(lp.objective);
  try {
    while (tab.step(art_begin)) {}
  } catch (const std::runtime_error&) {
    return {LpStatus::unbounded, -std::numeric_limits<double>::infinity(), {}};
  }

  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (tab.basis[i] < n) x[tab.basis[i]] = tab.t[i][tab.ncols];
  double value = 0.0;
  for (std::size_t j = 0; j < n; ++j) value += lp.objective[j] * x[j];
  return {LpStatus::optimal, value, std::move(x)};
}

}  // namespace wmlab
