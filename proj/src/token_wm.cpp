#include "wmlab/token_wm.hpp"

#include <cmath>
#include <stdexcept>

namespace wmlab {

namespace {

void check_params(const SchemeParams& p) {
  if (!(p.eta > 0.0) || p.eta > 1.0) throw std::invalid_argument("SchemeParams: eta outside (0,1]");
  if (!(p.lambda > 0.0) || !(p.lambda < 1.0))
    throw std::invalid_argument("SchemeParams: lambda outside (0,1)");
  if (p.context_window == 0 || p.context_window > 64)
    throw std::invalid_argument("SchemeParams: context window outside 1..64");
}

std::span<const std::uint32_t> tail_window(const std::vector<std::uint32_t>& text,
                                           std::size_t upto, std::size_t n) {
  std::size_t len = std::min(n, upto);
  return {text.data() + (upto - len), len};
}

}  // namespace

std::size_t GenerationTrace::redundant_count() const {
  std::size_t c = 0;
  for (std::uint8_t f : redundant_flags) c += f;
  return c;
}

Categorical build_aux_dist(const Categorical& q, const AuxAlphabet& aux, double eta) {
  if (aux.vocab_size != q.size()) throw std::invalid_argument("build_aux_dist: vocab mismatch");
  if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("build_aux_dist: eta outside (0,1]");
  std::vector<double> p(aux.aux_size(), 0.0);
  double overflow = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x) {
    double capped = std::min(q[x], eta);
    p[aux.token_to_aux[x]] = capped;
    overflow += q[x] - capped;
  }
  p[aux.redundant_id()] = overflow;
  return Categorical(std::move(p));
}

Categorical residual_dist(const Categorical& q, double eta) {
  std::vector<double> w(q.size(), 0.0);
  double total = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x) {
    if (q[x] > eta) {
      w[x] = q[x] - eta;
      total += w[x];
    }
  }
  if (total <= 0.0) throw std::domain_error("residual_dist: no mass above eta");
  for (double& v : w) v /= total;
  return Categorical(std::move(w));
}

GenerationTrace generate(const NgramModel& model, std::span<const std::uint32_t> prompt,
                         const WatermarkKey& key, const SchemeParams& params,
                         std::uint64_t rng_seed) {
  check_params(params);
  const std::size_t m = model.vocab_size();
  AuxAlphabet aux = derive_aux_alphabet(key, m);
  std::mt19937_64 rng(rng_seed);

  GenerationTrace trace;
  trace.tokens.reserve(params.seq_len);
  std::vector<std::uint32_t> full(prompt.begin(), prompt.end());
  for (std::size_t t = 0; t < params.seq_len; ++t) {
    Categorical q = model.ntp(full);
    Categorical p_aux = build_aux_dist(q, aux, params.eta);
    Seed seed = seed_from_context(key, tail_window(trace.tokens, t, params.context_window));
    GumbelVector noise = gumbel_vector(seed, p_aux.size());
    std::size_t zeta = gumbel_argmax(p_aux, noise.values);

    std::uint32_t x;
    bool redundant = zeta == aux.redundant_id();
    if (redundant) {
      x = sample_categorical(residual_dist(q, params.eta), rng);
    } else {
      x = aux.aux_to_token[zeta];
    }
    trace.tokens.push_back(x);
    trace.aux_ids.push_back(static_cast<std::uint32_t>(zeta));
    trace.redundant_flags.push_back(redundant ? 1 : 0);
    full.push_back(x);
  }
  return trace;
}

DetectionReport detect(const NgramModel& surrogate, std::span<const std::uint32_t> text,
                       const WatermarkKey& key, const SchemeParams& params) {
  check_params(params);
  if (text.empty()) throw std::invalid_argument("detect: empty text");
  const std::size_t m = surrogate.vocab_size();
  for (std::uint32_t x : text)
    if (x >= m) throw std::domain_error("detect: text token outside surrogate vocab");
  AuxAlphabet aux = derive_aux_alphabet(key, m);

  DetectionReport rep;
  rep.threshold = params.lambda;
  rep.per_token_match.reserve(text.size());
  std::vector<std::uint32_t> prefix(text.begin(), text.end());
  std::size_t matches = 0;
  for (std::size_t t = 0; t < text.size(); ++t) {
    Categorical q = surrogate.ntp({prefix.data(), t});
    Categorical p_aux = build_aux_dist(q, aux, params.eta);
    Seed seed = seed_from_context(key, tail_window(prefix, t, params.context_window));
    GumbelVector noise = gumbel_vector(seed, p_aux.size());
    std::size_t zeta = gumbel_argmax(p_aux, noise.values);
    if (zeta == aux.redundant_id()) ++rep.redundant_count;
    bool match = aux.token_to_aux[text[t]] == zeta;
    rep.per_token_match.push_back(match ? 1 : 0);
    matches += match;
  }
  rep.score = static_cast<double>(matches) / static_cast<double>(text.size());
  rep.decision = rep.score > params.lambda ? Verdict::watermarked : Verdict::unwatermarked;
  return rep;
}

std::size_t match_count_threshold(std::size_t seq_len, double lambda) {
  if (seq_len == 0) throw std::invalid_argument("match_count_threshold: empty sequence");
  if (!(lambda > 0.0) || !(lambda < 1.0))
    throw std::invalid_argument("match_count_threshold: lambda outside (0,1)");
  // Nudge below the product so thresholds like 14/50 survive the representation
  // of lambda as a double.
  double k = std::ceil(static_cast<double>(seq_len) * lambda - 1e-9);
  if (k < 1.0) k = 1.0;
  if (k > static_cast<double>(seq_len)) k = static_cast<double>(seq_len);
  return static_cast<std::size_t>(k);
}

double calibrate_eta(double alpha, std::size_t seq_len, double lambda) {
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("calibrate_eta: alpha outside (0,1]");
  std::size_t k = match_count_threshold(seq_len, lambda);
  double log_choose = std::lgamma(static_cast<double>(seq_len) + 1.0) -
                      std::lgamma(static_cast<double>(k) + 1.0) -
                      std::lgamma(static_cast<double>(seq_len - k) + 1.0);
  double log_eta = (std::log(alpha) - log_choose) / static_cast<double>(k);
  return std::exp(std::min(0.0, log_eta));
}

double sequence_fpr_bound(std::size_t seq_len, double eta, double lambda) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("sequence_fpr_bound: eta outside [0,1]");
  std::size_t k = match_count_threshold(seq_len, lambda);
  if (eta == 0.0) return 0.0;
  double log_choose = std::lgamma(static_cast<double>(seq_len) + 1.0) -
                      std::lgamma(static_cast<double>(k) + 1.0) -
                      std::lgamma(static_cast<double>(seq_len - k) + 1.0);
  double log_bound = log_choose + static_cast<double>(k) * std::log(eta);
  return std::exp(std::min(0.0, log_bound));
}

ReplaceableEstimate expected_replaceable(const NgramModel& model,
                                         std::span<const std::uint32_t> prompt,
                                         const WatermarkKey& key, const SchemeParams& params,
                                         std::size_t num_traces, std::uint64_t rng_seed) {
  check_params(params);
  if (num_traces == 0) throw std::invalid_argument("expected_replaceable: no traces");
  const std::size_t m = model.vocab_size();
  AuxAlphabet aux = derive_aux_alphabet(key, m);

  std::vector<double> diffs(num_traces);
  double analytic_sum = 0.0, empirical_sum = 0.0;
  for (std::size_t i = 0; i < num_traces; ++i) {
    std::mt19937_64 rng(stream_u64(rng_seed, i));
    std::vector<std::uint32_t> full(prompt.begin(), prompt.end());
    std::vector<std::uint32_t> generated;
    double analytic = 0.0;
    std::size_t redundant = 0;
    for (std::size_t t = 0; t < params.seq_len; ++t) {
      Categorical q = model.ntp(full);
      analytic += plus_part_excess(q, params.eta);
      Categorical p_aux = build_aux_dist(q, aux, params.eta);
      Seed seed = seed_from_context(key, tail_window(generated, t, params.context_window));
      GumbelVector noise = gumbel_vector(seed, p_aux.size());
      std::size_t zeta = gumbel_argmax(p_aux, noise.values);
      std::uint32_t x;
      if (zeta == aux.redundant_id()) {
        ++redundant;
        x = sample_categorical(residual_dist(q, params.eta), rng);
      } else {
        x = aux.aux_to_token[zeta];
      }
      generated.push_back(x);
      full.push_back(x);
    }
    analytic_sum += analytic;
    empirical_sum += static_cast<double>(redundant);
    diffs[i] = static_cast<double>(redundant) - analytic;
  }

  ReplaceableEstimate est;
  est.num_traces = num_traces;
  est.analytic = analytic_sum / static_cast<double>(num_traces);
  est.empirical = empirical_sum / static_cast<double>(num_traces);
  double mean_diff = (empirical_sum - analytic_sum) / static_cast<double>(num_traces);
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean_diff) * (d - mean_diff);
  est.diff_stddev = num_traces > 1 ? std::sqrt(ss / static_cast<double>(num_traces - 1)) : 0.0;
  return est;
}

}  // namespace wmlab
