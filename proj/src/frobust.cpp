#include "wmlab/frobust.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace wmlab {

LatentMap LatentMap::from_assignment(std::vector<std::uint32_t> assign) {
  if (assign.empty()) throw std::invalid_argument("LatentMap: empty vocab");
  LatentMap f;
  f.vocab_size = assign.size();
  f.num_classes = *std::max_element(assign.begin(), assign.end()) + 1;
  f.assign = std::move(assign);
  f.classes.resize(f.num_classes);
  for (std::size_t x = 0; x < f.vocab_size; ++x)
    f.classes[f.assign[x]].push_back(static_cast<std::uint32_t>(x));
  for (const auto& c : f.classes)
    if (c.empty()) throw std::invalid_argument("LatentMap: class with no members");
  return f;
}

LatentMap LatentMap::identity(std::size_t m) {
  std::vector<std::uint32_t> a(m);
  for (std::size_t i = 0; i < m; ++i) a[i] = static_cast<std::uint32_t>(i);
  return from_assignment(std::move(a));
}

LatentMap LatentMap::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("K") || !j.contains("classes"))
    throw std::invalid_argument("LatentMap: missing K or classes");
  auto K = j.at("K").get<std::size_t>();
  auto cls = j.at("classes").get<std::vector<std::vector<std::uint32_t>>>();
  if (cls.size() != K) throw std::invalid_argument("LatentMap: K does not match classes");
  std::size_t vocab = 0;
  for (const auto& c : cls)
    for (std::uint32_t x : c) vocab = std::max<std::size_t>(vocab, x + 1);
  std::vector<std::uint32_t> assign(vocab, 0xFFFFFFFFu);
  for (std::size_t k = 0; k < K; ++k)
    for (std::uint32_t x : cls[k]) {
      if (assign[x] != 0xFFFFFFFFu)
        throw std::invalid_argument("LatentMap: token in two classes");
      assign[x] = static_cast<std::uint32_t>(k);
    }
  for (std::uint32_t a : assign)
    if (a == 0xFFFFFFFFu) throw std::invalid_argument("LatentMap: token in no class");
  return from_assignment(std::move(assign));
}

std::string LatentMap::to_json() const {
  nlohmann::json j;
  j["K"] = num_classes;
  j["classes"] = classes;
  return j.dump();
}

Categorical class_masses(const Categorical& q, const LatentMap& f) {
  return aggregate_masses(q, f.assign, f.num_classes);
}

double robust_min_type2(const Categorical& q, double alpha, double eps, const LatentMap& f) {
  return project_min_excess(class_masses(q, f), alpha, eps).objective;
}

Detector class_detector(const LatentMap& f, const std::vector<ClassTarget>& g) {
  Detector det = Detector::zeros(f.vocab_size, g.size());
  for (std::size_t z = 0; z < g.size(); ++z) {
    switch (g[z].kind) {
      case ClassTarget::class_id:
        if (g[z].id >= f.num_classes)
          throw std::invalid_argument("class_detector: class id out of range");
        for (std::uint32_t x : f.classes[g[z].id]) det.at_mut(x, z) = 1;
        break;
      case ClassTarget::token_id:
        if (g[z].id >= f.vocab_size)
          throw std::invalid_argument("class_detector: token id out of range");
        det.at_mut(g[z].id, z) = 1;
        break;
      case ClassTarget::redundant:
        break;
    }
  }
  return det;
}

JointScheme build_frobust_scheme(const Categorical& q, double alpha, double eps,
                                 const LatentMap& f, const std::vector<ClassTarget>& g) {
  if (q.size() != f.vocab_size) throw std::invalid_argument("build_frobust_scheme: vocab mismatch");
  const std::size_t m = q.size();
  const std::size_t Z = g.size();
  std::vector<std::vector<std::size_t>> fibers(f.num_classes);
  std::vector<std::size_t> redundant;
  for (std::size_t z = 0; z < Z; ++z) {
    switch (g[z].kind) {
      case ClassTarget::class_id:
        if (g[z].id >= f.num_classes)
          throw std::invalid_argument("build_frobust_scheme: class id out of range");
        fibers[g[z].id].push_back(z);
        break;
      case ClassTarget::redundant:
        redundant.push_back(z);
        break;
      case ClassTarget::token_id:
        throw std::invalid_argument("build_frobust_scheme: token targets unsupported here");
    }
  }
  for (std::size_t k = 0; k < f.num_classes; ++k)
    if (fibers[k].empty())
      throw std::invalid_argument("build_frobust_scheme: targets must cover every class");
  if (redundant.empty())
    throw std::invalid_argument("build_frobust_scheme: needs a redundant symbol");

  Categorical masses = class_masses(q, f);
  Categorical proj = project_min_excess(masses, alpha, eps).projected;

  // Realize the class-level projection token by token: scale within donor and
  // receiver classes, or place mass on the first member of an empty class.
  std::vector<double> pstar(m, 0.0);
  for (std::size_t k = 0; k < f.num_classes; ++k) {
    if (masses[k] > 0.0) {
      double scale = proj[k] / masses[k];
      for (std::uint32_t x : f.classes[k]) pstar[x] = q[x] * scale;
    } else if (proj[k] > 0.0) {
      pstar[f.classes[k].front()] = proj[k];
    }
  }

  std::vector<double> joint(m * Z, 0.0);
  for (std::size_t k = 0; k < f.num_classes; ++k) {
    double mk = proj[k];
    if (mk <= 0.0) continue;
    double detectable = std::min(mk, alpha);
    double residue = mk - detectable;
    double share = detectable / static_cast<double>(fibers[k].size());
    for (std::uint32_t x : f.classes[k]) {
      double frac = pstar[x] / mk;
      for (std::size_t z : fibers[k]) joint[x * Z + z] += frac * share;
      if (residue > 0.0) joint[x * Z + redundant.front()] += frac * residue;
    }
  }
  return JointScheme::from_joint(m, Z, std::move(joint));
}

RobustErrors robust_errors(const JointScheme& scheme, const Detector& det, const LatentMap& f) {
  if (scheme.num_outcomes != f.vocab_size || det.num_outcomes != f.vocab_size ||
      scheme.num_aux != det.num_aux)
    throw std::invalid_argument("robust_errors: shape mismatch");
  const std::size_t Z = det.num_aux;

  // any/all acceptance per (class, symbol): the adversary picks the best
  // substitute to trigger a false alarm and the worst to evade detection.
  std::vector<std::uint8_t> any(f.num_classes * Z, 0), all(f.num_classes * Z, 1);
  for (std::size_t k = 0; k < f.num_classes; ++k)
    for (std::size_t z = 0; z < Z; ++z) {
      for (std::uint32_t x : f.classes[k]) {
        if (det.at(x, z)) any[k * Z + z] = 1;
        else all[k * Z + z] = 0;
      }
    }

  RobustErrors err;
  for (std::size_t k = 0; k < f.num_classes; ++k) {
    double acc = 0.0;
    for (std::size_t z = 0; z < Z; ++z)
      if (any[k * Z + z]) acc += scheme.marginal_aux[z];
    err.type1_worst = std::max(err.type1_worst, acc);
  }
  double caught = 0.0;
  for (std::size_t x = 0; x < f.vocab_size; ++x)
    for (std::size_t z = 0; z < Z; ++z)
      if (all[f.assign[x] * Z + z]) caught += scheme.at(x, z);
  err.type2 = 1.0 - caught;
  return err;
}

}  // namespace wmlab
