#include "wmlab/seq_opt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wmlab/simplex.hpp"

namespace wmlab {

Detector Detector::zeros(std::size_t outcomes, std::size_t aux) {
  Detector d;
  d.num_outcomes = outcomes;
  d.num_aux = aux;
  d.accept.assign(outcomes * aux, 0);
  return d;
}

JointScheme JointScheme::from_joint(std::size_t outcomes, std::size_t aux,
                                    std::vector<double> joint) {
  if (joint.size() != outcomes * aux)
    throw std::invalid_argument("JointScheme: joint size mismatch");
  JointScheme s;
  s.num_outcomes = outcomes;
  s.num_aux = aux;
  s.joint = std::move(joint);
  s.marginal_x.assign(outcomes, 0.0);
  s.marginal_aux.assign(aux, 0.0);
  double total = 0.0;
  for (std::size_t x = 0; x < outcomes; ++x)
    for (std::size_t z = 0; z < aux; ++z) {
      double v = s.joint[x * aux + z];
      if (v < -1e-12) throw std::invalid_argument("JointScheme: negative mass");
      s.marginal_x[x] += v;
      s.marginal_aux[z] += v;
      total += v;
    }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("JointScheme: total mass not 1");
  return s;
}

Detector detector_from_image(const std::vector<int>& g, std::size_t num_outcomes) {
  Detector det = Detector::zeros(num_outcomes, g.size());
  for (std::size_t z = 0; z < g.size(); ++z) {
    if (g[z] < -1 || g[z] >= static_cast<int>(num_outcomes))
      throw std::invalid_argument("detector_from_image: image out of range");
    if (g[z] >= 0) det.at_mut(static_cast<std::size_t>(g[z]), z) = 1;
  }
  return det;
}

bool is_match_shape(const Detector& det) {
  for (std::size_t z = 0; z < det.num_aux; ++z) {
    int col = 0;
    for (std::size_t x = 0; x < det.num_outcomes; ++x) col += det.at(x, z);
    if (col > 1) return false;
  }
  for (std::size_t x = 0; x < det.num_outcomes; ++x) {
    int row = 0;
    for (std::size_t z = 0; z < det.num_aux; ++z) row += det.at(x, z);
    if (row == 0) return false;
  }
  return true;
}

double min_type2_closed_form(const Categorical& q, double alpha, double eps) {
  double excess = plus_part_excess(q, alpha);
  double floor = 1.0 - static_cast<double>(q.size()) * alpha;
  return std::max(std::max(excess - eps, floor), 0.0);
}

JointScheme build_optimal_scheme(const Categorical& q, double alpha, double eps,
                                 const std::vector<int>& g) {
  const std::size_t m = q.size();
  const std::size_t Z = g.size();
  std::vector<std::vector<std::size_t>> fibers(m);
  std::vector<std::size_t> redundant;
  for (std::size_t z = 0; z < Z; ++z) {
    if (g[z] < -1 || g[z] >= static_cast<int>(m))
      throw std::invalid_argument("build_optimal_scheme: image out of range");
    if (g[z] < 0) redundant.push_back(z);
    else fibers[static_cast<std::size_t>(g[z])].push_back(z);
  }
  for (std::size_t x = 0; x < m; ++x)
    if (fibers[x].empty())
      throw std::invalid_argument("build_optimal_scheme: image must cover every outcome");

  Categorical pstar = project_min_excess(q, alpha, eps).projected;
  double leftover = plus_part_excess(pstar, alpha);
  if (leftover > 1e-12 && redundant.empty())
    throw std::invalid_argument("build_optimal_scheme: needs a redundant symbol for excess mass");

  std::vector<double> joint(m * Z, 0.0);
  for (std::size_t x = 0; x < m; ++x) {
    double detectable = std::min(pstar[x], alpha);
    double residue = pstar[x] - detectable;
    double share = detectable / static_cast<double>(fibers[x].size());
    for (std::size_t z : fibers[x]) joint[x * Z + z] = share;
    if (residue > 0.0) joint[x * Z + redundant.front()] += residue;
  }
  return JointScheme::from_joint(m, Z, std::move(joint));
}

double exact_type1_worst(const JointScheme& scheme, const Detector& det) {
  if (scheme.num_outcomes != det.num_outcomes || scheme.num_aux != det.num_aux)
    throw std::invalid_argument("exact_type1_worst: shape mismatch");
  double worst = 0.0;
  for (std::size_t x = 0; x < det.num_outcomes; ++x) {
    double acc = 0.0;
    for (std::size_t z = 0; z < det.num_aux; ++z)
      if (det.at(x, z)) acc += scheme.marginal_aux[z];
    worst = std::max(worst, acc);
  }
  return worst;
}

double exact_type2(const JointScheme& scheme, const Detector& det) {
  if (scheme.num_outcomes != det.num_outcomes || scheme.num_aux != det.num_aux)
    throw std::invalid_argument("exact_type2: shape mismatch");
  double caught = 0.0;
  for (std::size_t x = 0; x < det.num_outcomes; ++x)
    for (std::size_t z = 0; z < det.num_aux; ++z)
      if (det.at(x, z)) caught += scheme.at(x, z);
  return 1.0 - caught;
}

LpMinResult lp_min_type2(const Detector& det, const Categorical& q, double alpha, double eps) {
  const std::size_t m = q.size();
  const std::size_t Z = det.num_aux;
  if (det.num_outcomes != m) throw std::invalid_argument("lp_min_type2: shape mismatch");

  // Variables: joint mass p[x][z] (m*Z), then TV deviations d[x] (m).
  const std::size_t np = m * Z;
  const std::size_t nv = np + m;
  auto pid = [Z](std::size_t x, std::size_t z) { return x * Z + z; };

  LpProblem lp;
  lp.num_vars = nv;
  lp.objective.assign(nv, 0.0);
  for (std::size_t x = 0; x < m; ++x)
    for (std::size_t z = 0; z < Z; ++z)
      if (!det.at(x, z)) lp.objective[pid(x, z)] = 1.0;  // missed mass

  {  // total mass
    LpRow r{std::vector<double>(nv, 0.0), LpSense::eq, 1.0};
    for (std::size_t i = 0; i < np; ++i) r.a[i] = 1.0;
    lp.rows.push_back(std::move(r));
  }
  // Worst-case Type-I: for each point mass x, accepted auxiliary mass <= alpha.
  for (std::size_t x = 0; x < m; ++x) {
    bool nonzero = false;
    LpRow r{std::vector<double>(nv, 0.0), LpSense::le, alpha};
    for (std::size_t z = 0; z < Z; ++z) {
      if (!det.at(x, z)) continue;
      nonzero = true;
      for (std::size_t y = 0; y < m; ++y) r.a[pid(y, z)] += 1.0;
    }
    if (nonzero) lp.rows.push_back(std::move(r));
  }
  // TV ball: |sum_z p[x][z] - q(x)| <= d[x], sum_x d[x] <= 2 eps.
  for (std::size_t x = 0; x < m; ++x) {
    LpRow hi{std::vector<double>(nv, 0.0), LpSense::le, q[x]};
    LpRow lo{std::vector<double>(nv, 0.0), LpSense::ge, q[x]};
    for (std::size_t z = 0; z < Z; ++z) {
      hi.a[pid(x, z)] = 1.0;
      lo.a[pid(x, z)] = 1.0;
    }
    hi.a[np + x] = -1.0;
    lo.a[np + x] = 1.0;
    lp.rows.push_back(std::move(hi));
    lp.rows.push_back(std::move(lo));
  }
  {
    LpRow r{std::vector<double>(nv, 0.0), LpSense::le, 2.0 * eps};
    for (std::size_t x = 0; x < m; ++x) r.a[np + x] = 1.0;
    lp.rows.push_back(std::move(r));
  }

  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal) return {1.0, false};
  return {sol.objective, true};
}

SweepResult universal_min_type2(const Categorical& q, double alpha, double eps,
                                std::size_t aux_size) {
  const std::size_t m = q.size();
  if (aux_size == 0) throw std::invalid_argument("universal_min_type2: empty aux alphabet");
  if (m * aux_size > 16)
    throw std::length_error("universal_min_type2: instance too large to enumerate");

  const std::uint32_t patterns = 1u << m;  // bitmask over outcomes per column
  SweepResult res;
  res.best = Detector::zeros(m, aux_size);
  constexpr double kTieTol = 1e-9;

  // Columns in nondecreasing pattern order: one representative per relabeling
  // of the auxiliary alphabet. The optimum is invariant under that relabeling.
  std::vector<std::uint32_t> cols(aux_size, 0);
  while (true) {
    Detector det = Detector::zeros(m, aux_size);
    for (std::size_t z = 0; z < aux_size; ++z)
      for (std::size_t x = 0; x < m; ++x)
        if (cols[z] >> x & 1u) det.at_mut(x, z) = 1;
    ++res.detectors_scanned;

    LpMinResult r = lp_min_type2(det, q, alpha, eps);
    if (r.feasible) {
      bool shaped = is_match_shape(det);
      if (r.type2 < res.min_type2 - kTieTol) {
        res.min_type2 = r.type2;
        res.best = det;
        res.match_shape_minimizer = shaped;
        res.other_shape_minimizer = !shaped;
      } else if (r.type2 < res.min_type2 + kTieTol) {
        res.min_type2 = std::min(res.min_type2, r.type2);
        if (shaped && !res.match_shape_minimizer) {
          res.match_shape_minimizer = true;
          res.best = det;
        }
        if (!shaped) res.other_shape_minimizer = true;
      }
    }

    std::size_t k = aux_size;
    while (k > 0 && cols[k - 1] == patterns - 1) --k;
    if (k == 0) break;
    std::uint32_t next = cols[k - 1] + 1;
    for (std::size_t j = k - 1; j < aux_size; ++j) cols[j] = next;
  }
  return res;
}

double merged_detector_min_type2(const Categorical& q, double alpha, double eps,
                                 const std::vector<std::uint32_t>& merge) {
  std::uint32_t num_classes = 0;
  for (std::uint32_t c : merge) num_classes = std::max(num_classes, c + 1);
  Categorical masses = aggregate_masses(q, merge, num_classes);
  return project_min_excess(masses, alpha, eps).objective;
}

}  // namespace wmlab
