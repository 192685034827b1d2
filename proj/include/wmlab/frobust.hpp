#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wmlab/dist.hpp"
#include "wmlab/seq_opt.hpp"

namespace wmlab {

/// Surjective token -> latent-class assignment; an adversary may swap a token
/// for any other member of its class before detection.
struct LatentMap {
  std::size_t vocab_size = 0;
  std::size_t num_classes = 0;
  std::vector<std::uint32_t> assign;                 // token -> class
  std::vector<std::vector<std::uint32_t>> classes;   // class -> members

  static LatentMap from_assignment(std::vector<std::uint32_t> assign);
  static LatentMap identity(std::size_t m);
  static LatentMap from_json(const std::string& text);
  std::string to_json() const;
};

Categorical class_masses(const Categorical& q, const LatentMap& f);

/// Minimum Type-II achievable by any scheme whose detection survives arbitrary
/// within-class substitution: the excess-mass program over class masses.
double robust_min_type2(const Categorical& q, double alpha, double eps, const LatentMap& f);

/// Target of an auxiliary symbol in a class-aware detector.
struct ClassTarget {
  enum Kind { class_id, token_id, redundant } kind = redundant;
  std::uint32_t id = 0;

  static ClassTarget cls(std::uint32_t k) { return {class_id, k}; }
  static ClassTarget tok(std::uint32_t x) { return {token_id, x}; }
  static ClassTarget none() { return {redundant, 0}; }
};

/// Acceptance matrix for symbols that vouch for a class (accepts every member),
/// a single token, or nothing.
Detector class_detector(const LatentMap& f, const std::vector<ClassTarget>& g);

/// Scheme attaining robust_min_type2 against class_detector: per class, mass
/// min(class mass, alpha) is detectable (split evenly over the class's
/// symbols), the rest rides the first redundant symbol. Targets must cover all
/// classes, include a redundant symbol, and use no token targets.
JointScheme build_frobust_scheme(const Categorical& q, double alpha, double eps,
                                 const LatentMap& f, const std::vector<ClassTarget>& g);

struct RobustErrors {
  double type1_worst = 0.0;  // sup over point masses and within-class swaps
  double type2 = 0.0;        // adversary picks the worst member of each class
};

/// Exact adversarial errors of an arbitrary detector by enumerating every
/// within-class substitution.
RobustErrors robust_errors(const JointScheme& scheme, const Detector& det, const LatentMap& f);

}  // namespace wmlab
