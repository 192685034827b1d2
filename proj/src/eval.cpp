#include "wmlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmlab {

RocCurve roc(std::span<const double> watermarked, std::span<const double> human) {
  if (watermarked.empty() || human.empty())
    throw std::invalid_argument("roc: both score sets must be nonempty");

  std::vector<double> thresholds;
  thresholds.reserve(watermarked.size() + human.size());
  thresholds.insert(thresholds.end(), watermarked.begin(), watermarked.end());
  thresholds.insert(thresholds.end(), human.begin(), human.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<double> w(watermarked.begin(), watermarked.end());
  std::vector<double> h(human.begin(), human.end());
  std::sort(w.begin(), w.end(), std::greater<>());
  std::sort(h.begin(), h.end(), std::greater<>());

  RocCurve curve;
  std::size_t wi = 0, hi = 0;
  for (double th : thresholds) {
    while (wi < w.size() && w[wi] >= th) ++wi;
    while (hi < h.size() && h[hi] >= th) ++hi;
    curve.points.push_back({static_cast<double>(hi) / static_cast<double>(h.size()),
                            static_cast<double>(wi) / static_cast<double>(w.size()), th});
  }

  double auc = 0.0, pf = 0.0, pt = 0.0;  // virtual (0,0) anchor
  for (const RocPoint& p : curve.points) {
    auc += (p.fpr - pf) * (p.tpr + pt) * 0.5;
    pf = p.fpr;
    pt = p.tpr;
  }
  curve.auc = auc;
  return curve;
}

double tpr_at_fpr(const RocCurve& curve, double fpr_target) {
  if (fpr_target < 0.0 || fpr_target > 1.0)
    throw std::invalid_argument("tpr_at_fpr: target outside [0,1]");
  double best = 0.0;
  bool found = false;
  double level = -1.0;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const RocPoint& p = curve.points[i];
    if (p.fpr > fpr_target) break;  // fpr nondecreasing along the sweep
    if (!found || p.fpr > level) {
      level = p.fpr;
      best = p.tpr;  // first point at this level carries the largest threshold
      found = true;
    }
  }
  return best;
}

AttackResult substitution_attack(std::span<const std::uint32_t> text, const AttackParams& params,
                                 const NgramModel& source_model, std::uint64_t rng_seed) {
  if (params.mask_rate < 0.0 || params.mask_rate > 1.0)
    throw std::invalid_argument("substitution_attack: mask_rate outside [0,1]");
  const std::size_t m = source_model.vocab_size();
  for (std::uint32_t x : text)
    if (x >= m) throw std::domain_error("substitution_attack: token outside source vocab");

  std::mt19937_64 rng(rng_seed);
  auto coin = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  AttackResult res;
  res.text.assign(text.begin(), text.end());
  Categorical unigram = source_model.ntp({});
  for (std::size_t i = 0; i < res.text.size(); ++i) {
    if (coin() >= params.mask_rate) continue;
    ++res.masked_count;
    std::uint32_t repl = 0;
    switch (params.source) {
      case SubSource::uniform:
        repl = static_cast<std::uint32_t>(
            std::min<std::uint64_t>(m - 1, static_cast<std::uint64_t>(coin() * static_cast<double>(m))));
        break;
      case SubSource::unigram:
        repl = sample_categorical(unigram, rng);
        break;
      case SubSource::contextual:
        repl = sample_categorical(source_model.ntp({res.text.data(), i}), rng);
        break;
    }
    if (repl != res.text[i]) ++res.replaced_count;
    res.text[i] = repl;
  }
  res.replaced_fraction =
      text.empty() ? 0.0 : static_cast<double>(res.replaced_count) / static_cast<double>(text.size());
  return res;
}

FprStudyResult fpr_study(const NgramModel& human_source, const WatermarkKey& key,
                         const SchemeParams& params, std::size_t num_sequences,
                         std::span<const double> lambda_grid, std::uint64_t rng_seed) {
  if (num_sequences == 0) throw std::invalid_argument("fpr_study: no sequences");
  if (lambda_grid.empty()) throw std::invalid_argument("fpr_study: empty lambda grid");

  // One detection pass per sequence; the score is threshold-free.
  std::vector<double> scores(num_sequences);
  for (std::size_t i = 0; i < num_sequences; ++i) {
    std::vector<std::uint32_t> text =
        human_source.sample_sequence({}, params.seq_len, stream_u64(rng_seed, i));
    scores[i] = detect(human_source, text, key, params).score;
  }

  FprStudyResult out;
  for (double lambda : lambda_grid) {
    FprRow row;
    row.lambda = lambda;
    if (lambda >= 1.0) {
      // unattainable thresholds: the score never exceeds 1, so the alarm
      // probability is eta^T at lambda == 1 and zero beyond it
      row.match_threshold = static_cast<std::size_t>(
          std::ceil(static_cast<double>(params.seq_len) * lambda - 1e-9));
      row.theoretical =
          lambda > 1.0 ? 0.0
                       : std::exp(static_cast<double>(params.seq_len) * std::log(params.eta));
    } else {
      row.match_threshold = match_count_threshold(params.seq_len, lambda);
      row.theoretical = sequence_fpr_bound(params.seq_len, params.eta, lambda);
    }
    std::size_t alarms = 0;
    for (double s : scores) alarms += s > lambda;
    row.empirical = static_cast<double>(alarms) / static_cast<double>(num_sequences);
    row.num_sequences = num_sequences;
    if (row.empirical > row.theoretical + 1e-15) out.empirical_within_bound = false;
    out.rows.push_back(row);
  }
  return out;
}

double type2_bound(double delta, double psi, double phi, double a) {
  if (a < 0.0 || a > 1.0) throw std::invalid_argument("type2_bound: a outside [0,1]");
  if (delta < 0.0 || psi < 0.0 || phi < 0.0)
    throw std::invalid_argument("type2_bound: negative parameter");
  if (delta == 0.0) return 1.0;
  double quad = (1.0 - a) * (1.0 - a) * delta * delta / (8.0 * phi + 2.0 * delta);
  double expo = quad;
  if (psi > 0.0) expo = std::min(expo, (1.0 - a) * delta / (6.0 * psi));
  return std::exp(-expo);
}

JansonParams janson_from_matches(const std::vector<std::vector<std::uint8_t>>& match_rows,
                                 std::size_t context_window) {
  if (match_rows.empty()) throw std::invalid_argument("janson_from_matches: no traces");
  const std::size_t T = match_rows.front().size();
  if (T == 0) throw std::invalid_argument("janson_from_matches: empty traces");
  for (const auto& row : match_rows)
    if (row.size() != T) throw std::invalid_argument("janson_from_matches: ragged traces");
  const double N = static_cast<double>(match_rows.size());
  const std::size_t n = context_window;

  std::vector<double> rate(T, 0.0);
  for (const auto& row : match_rows)
    for (std::size_t t = 0; t < T; ++t) rate[t] += row[t];
  for (double& r : rate) r /= N;

  JansonParams p;
  for (double r : rate) p.delta += r;
  for (std::size_t i = 0; i < T; ++i) {
    double acc = 0.0;
    std::size_t lo = i > n ? i - n : 0;
    std::size_t hi = std::min(T - 1, i + n);
    for (std::size_t j = lo; j <= hi; ++j)
      if (j != i) acc += rate[j];
    p.psi = std::max(p.psi, acc);
  }
  for (std::size_t i = 0; i < T; ++i) {
    std::size_t hi = std::min(T - 1, i + n);
    for (std::size_t j = i + 1; j <= hi; ++j) {
      double pair = 0.0;
      for (const auto& row : match_rows) pair += row[i] && row[j];
      p.phi += pair / N;  // unordered dependent pairs
    }
  }
  return p;
}

}  // namespace wmlab
