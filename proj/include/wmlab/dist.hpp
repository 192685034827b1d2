#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace wmlab {

/// Discrete probability distribution over ids 0..size-1.
/// Entries must be nonnegative and sum to 1 within 1e-9; construction never
/// renormalizes (use from_weights for that).
class Categorical {
 public:
  explicit Categorical(std::vector<double> probs);

  static Categorical uniform(std::size_t m);
  static Categorical point_mass(std::size_t m, std::size_t id);
  static Categorical from_weights(std::span<const double> weights);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// Sum of (p_i - thresh)+ over all entries. Equals 1 - sum_i min(p_i, thresh).
double plus_part_excess(const Categorical& p, double thresh);

/// Total variation distance, (1/2) sum |p_i - q_i|. Sizes must match.
double tv_distance(const Categorical& p, const Categorical& q);

struct ProjectionResult {
  Categorical projected;
  double objective;   // plus_part_excess(projected, alpha)
  double mass_moved;  // tv_distance(projected, q)
};

/// Minimize sum (P - alpha)+ over the TV ball of radius eps around q.
/// Optimum is max((sum(q - alpha)+ - eps)+, (1 - m*alpha)+): mass moves from
/// entries above alpha to entries below it, filling receivers up to alpha and
/// never past it. Deterministic tie-breaking: donors by decreasing excess then
/// increasing index, receivers in increasing index order.
ProjectionResult project_min_excess(const Categorical& q, double alpha, double eps);

/// Class-aggregated masses: out[k] = sum of q[x] over x with assign[x] == k.
Categorical aggregate_masses(const Categorical& q, std::span<const std::uint32_t> assign,
                             std::size_t num_classes);

/// Inverse-CDF draw using one uniform from rng. Deterministic given rng state.
std::uint32_t sample_categorical(const Categorical& p, std::mt19937_64& rng);

}  // namespace wmlab
