#include "wmlab/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wmlab {

namespace {
constexpr double kSumTol = 1e-9;
constexpr double kNegTol = 1e-12;
}  // namespace

Categorical::Categorical(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("Categorical: empty support");
  double sum = 0.0;
  for (double& p : probs_) {
    if (!std::isfinite(p) || p < -kNegTol)
      throw std::invalid_argument("Categorical: negative or non-finite entry");
    if (p < 0.0) p = 0.0;  // swallow roundoff-scale negatives only
    sum += p;
  }
  if (std::fabs(sum - 1.0) > kSumTol)
    throw std::invalid_argument("Categorical: entries do not sum to 1");
}

Categorical Categorical::uniform(std::size_t m) {
  if (m == 0) throw std::invalid_argument("Categorical: empty support");
  return Categorical(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

Categorical Categorical::point_mass(std::size_t m, std::size_t id) {
  if (id >= m) throw std::invalid_argument("Categorical: point mass id out of range");
  std::vector<double> p(m, 0.0);
  p[id] = 1.0;
  return Categorical(std::move(p));
}

Categorical Categorical::from_weights(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("Categorical: empty support");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw std::invalid_argument("Categorical: negative or non-finite weight");
    sum += w;
  }
  if (sum <= 0.0) throw std::invalid_argument("Categorical: zero total weight");
  std::vector<double> p(weights.begin(), weights.end());
  for (double& x : p) x /= sum;
  return Categorical(std::move(p));
}

double plus_part_excess(const Categorical& p, double thresh) {
  if (thresh < 0.0 || thresh > 1.0)
    throw std::invalid_argument("plus_part_excess: thresh outside [0,1]");
  double acc = 0.0;
  for (double x : p.probs())
    if (x > thresh) acc += x - thresh;
  return acc;
}

double tv_distance(const Categorical& p, const Categorical& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::fabs(p[i] - q[i]);
  return 0.5 * acc;
}

ProjectionResult project_min_excess(const Categorical& q, double alpha, double eps) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("project_min_excess: alpha outside [0,1]");
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("project_min_excess: eps outside [0,1]");
  const std::size_t m = q.size();

  double excess_total = 0.0, deficit_total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (q[i] > alpha) excess_total += q[i] - alpha;
    else deficit_total += alpha - q[i];
  }
  double budget = std::min(eps, std::min(excess_total, deficit_total));

  std::vector<double> p = q.probs();
  std::vector<std::size_t> donors;
  for (std::size_t i = 0; i < m; ++i)
    if (q[i] > alpha) donors.push_back(i);
  std::stable_sort(donors.begin(), donors.end(),
                   [&](std::size_t a, std::size_t b) { return q[a] - alpha > q[b] - alpha; });

  // Drain donors down toward alpha while filling receivers up to alpha,
  // spending exactly `budget` of TV.
  double to_take = budget;
  for (std::size_t d : donors) {
    if (to_take <= 0.0) break;
    double take = std::min(to_take, p[d] - alpha);
    p[d] -= take;
    to_take -= take;
  }
  double to_give = budget;
  for (std::size_t r = 0; r < m && to_give > 0.0; ++r) {
    if (q[r] >= alpha) continue;
    double give = std::min(to_give, alpha - p[r]);
    p[r] += give;
    to_give -= give;
  }

  Categorical projected(std::move(p));
  double objective = plus_part_excess(projected, alpha);
  return ProjectionResult{std::move(projected), objective, budget};
}

Categorical aggregate_masses(const Categorical& q, std::span<const std::uint32_t> assign,
                             std::size_t num_classes) {
  if (assign.size() != q.size())
    throw std::invalid_argument("aggregate_masses: assignment size mismatch");
  if (num_classes == 0) throw std::invalid_argument("aggregate_masses: no classes");
  std::vector<double> masses(num_classes, 0.0);
  for (std::size_t x = 0; x < q.size(); ++x) {
    if (assign[x] >= num_classes)
      throw std::invalid_argument("aggregate_masses: class id out of range");
    masses[assign[x]] += q[x];
  }
  return Categorical(std::move(masses));
}

std::uint32_t sample_categorical(const Categorical& p, std::mt19937_64& rng) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  std::size_t last_positive = 0;
  bool seen = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last_positive = i;
    seen = true;
    if (u < acc) return static_cast<std::uint32_t>(i);
  }
  if (!seen) throw std::domain_error("sample_categorical: no positive mass");
  return static_cast<std::uint32_t>(last_positive);  // u landed in roundoff tail
}

}  // namespace wmlab
