#pragma once

#include <cstddef>
#include <vector>

namespace wmlab {

enum class LpSense { le, ge, eq };

struct LpRow {
  std::vector<double> a;
  LpSense sense;
  double rhs;
};

/// minimize objective . x  subject to rows, x >= 0
struct LpProblem {
  std::size_t num_vars;
  std::vector<double> objective;
  std::vector<LpRow> rows;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status;
  double objective;
  std::vector<double> x;
};

/// Dense two-phase tableau simplex with Bland's rule (anti-cycling).
/// Intended for small well-scaled systems; results reproducible to ~1e-10.
LpSolution solve_lp(const LpProblem& lp);

}  // namespace wmlab
