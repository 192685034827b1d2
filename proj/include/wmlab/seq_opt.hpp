#pragma once

#include <cstdint>
#include <vector>

#include "wmlab/dist.hpp"

namespace wmlab {

/// Deterministic acceptance region over (text outcome, auxiliary symbol).
struct Detector {
  std::size_t num_outcomes = 0;  // text side
  std::size_t num_aux = 0;
  std::vector<std::uint8_t> accept;  // row-major: accept[x * num_aux + z]

  bool at(std::size_t x, std::size_t z) const { return accept[x * num_aux + z] != 0; }
  std::uint8_t& at_mut(std::size_t x, std::size_t z) { return accept[x * num_aux + z]; }
  static Detector zeros(std::size_t outcomes, std::size_t aux);
};

/// Joint law of (text outcome, auxiliary symbol) with cached marginals.
struct JointScheme {
  std::size_t num_outcomes = 0;
  std::size_t num_aux = 0;
  std::vector<double> joint;  // row-major over (x, z)
  std::vector<double> marginal_x;
  std::vector<double> marginal_aux;

  double at(std::size_t x, std::size_t z) const { return joint[x * num_aux + z]; }
  static JointScheme from_joint(std::size_t outcomes, std::size_t aux, std::vector<double> joint);
};

/// Image map for a detector of the accept-on-match family: g[z] is the outcome
/// symbol z vouches for, or -1 for a redundant symbol that accepts nothing.
Detector detector_from_image(const std::vector<int>& g, std::size_t num_outcomes);

/// True when every auxiliary symbol vouches for at most one outcome and every
/// outcome has a vouching symbol.
bool is_match_shape(const Detector& det);

/// Best achievable Type-II error against the worst-case per-outcome Type-I
/// budget alpha within a TV ball of radius eps: the excess-mass formula
/// max((sum(q - alpha)+ - eps)+, (1 - m*alpha)+).
double min_type2_closed_form(const Categorical& q, double alpha, double eps);

/// Joint scheme attaining min_type2_closed_form for a detector with image g
/// (at least one redundant symbol required when mass sits above alpha; g must
/// cover every outcome). Detectable mass min(P*(x), alpha) is split evenly
/// across x's vouching symbols; leftovers go to the first redundant symbol.
JointScheme build_optimal_scheme(const Categorical& q, double alpha, double eps,
                                 const std::vector<int>& g);

/// Worst-case Type-I over point-mass text laws: max_x sum_z aux_marginal(z) * accept(x,z).
double exact_type1_worst(const JointScheme& scheme, const Detector& det);

/// Missed-detection probability of det under the scheme's joint law.
double exact_type2(const JointScheme& scheme, const Detector& det);

struct LpMinResult {
  double type2 = 1.0;
  bool feasible = false;
};

/// Minimum Type-II over all joint schemes compatible with det: text marginal in
/// the TV ball, every point-mass Type-I at most alpha. Solved exactly as a
/// small LP.
LpMinResult lp_min_type2(const Detector& det, const Categorical& q, double alpha, double eps);

struct SweepResult {
  double min_type2 = 1.0;
  Detector best;                       // minimizer, match-shaped when one exists
  bool match_shape_minimizer = false;  // some minimizer is match-shaped
  bool other_shape_minimizer = false;  // some non-match-shaped detector ties the minimum
  std::size_t detectors_scanned = 0;
};

/// Exhaustive sweep over acceptance regions (canonical up to relabeling of the
/// auxiliary alphabet), each scored by lp_min_type2. Instances are capped at
/// num_outcomes * aux_size <= 16.
SweepResult universal_min_type2(const Categorical& q, double alpha, double eps,
                                std::size_t aux_size);

/// Minimum Type-II when the detector can only see which merge-class the text
/// fell in: the excess-mass program over aggregated masses.
double merged_detector_min_type2(const Categorical& q, double alpha, double eps,
                                 const std::vector<std::uint32_t>& merge);

}  // namespace wmlab
