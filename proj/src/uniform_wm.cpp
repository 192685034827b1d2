#include "wmlab/uniform_wm.hpp"

#include <cmath>
#include <stdexcept>

namespace wmlab {

namespace {

constexpr double kUniformTol = 1e-14;

std::span<const std::uint32_t> tail_window(const std::vector<std::uint32_t>& text,
                                           std::size_t upto, std::size_t n) {
  std::size_t len = std::min(n, upto);
  return {text.data() + (upto - len), len};
}

std::uint32_t uniform_symbol(Seed seed, std::size_t m) {
  double u = uniform_unit(seed, 0);
  auto z = static_cast<std::uint32_t>(u * static_cast<double>(m));
  return z >= m ? static_cast<std::uint32_t>(m - 1) : z;
}

}  // namespace

Categorical uniform_modified_ntp(const Categorical& q, std::uint32_t zeta,
                                 const AuxAlphabet& aux) {
  const std::size_t m = q.size();
  if (aux.vocab_size != m) throw std::invalid_argument("uniform_modified_ntp: vocab mismatch");
  if (zeta >= m) throw std::invalid_argument("uniform_modified_ntp: symbol out of range");
  const double inv_m = 1.0 / static_cast<double>(m);
  const std::uint32_t z_tok = aux.aux_to_token[zeta];

  double tv = 0.0;
  for (std::size_t x = 0; x < m; ++x) tv += std::max(q[x] - inv_m, 0.0);
  if (tv <= kUniformTol) return Categorical::point_mass(m, z_tok);

  double deficit = std::max(inv_m - q[z_tok], 0.0);
  std::vector<double> p(m, 0.0);
  for (std::size_t x = 0; x < m; ++x)
    p[x] = static_cast<double>(m) * std::max(q[x] - inv_m, 0.0) * deficit / tv;
  p[z_tok] = static_cast<double>(m) * std::min(q[z_tok], inv_m);
  return Categorical(std::move(p));
}

UniformCoupling build_uniform_coupling(const Categorical& q, const AuxAlphabet& aux) {
  const std::size_t m = q.size();
  if (aux.vocab_size != m) throw std::invalid_argument("build_uniform_coupling: vocab mismatch");
  UniformCoupling c;
  c.m = m;
  c.joint.assign(m * m, 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::uint32_t z = 0; z < m; ++z) {
    Categorical row = uniform_modified_ntp(q, z, aux);
    for (std::size_t x = 0; x < m; ++x) c.joint[x * m + z] = inv_m * row[x];
  }
  return c;
}

GenerationTrace uniform_generate(const NgramModel& model, std::span<const std::uint32_t> prompt,
                                 const WatermarkKey& key, std::size_t seq_len,
                                 std::size_t context_window, std::uint64_t rng_seed) {
  if (context_window == 0 || context_window > 64)
    throw std::invalid_argument("uniform_generate: context window outside 1..64");
  const std::size_t m = model.vocab_size();
  AuxAlphabet aux = derive_aux_alphabet(key, m);
  std::mt19937_64 rng(rng_seed);

  GenerationTrace trace;
  std::vector<std::uint32_t> full(prompt.begin(), prompt.end());
  for (std::size_t t = 0; t < seq_len; ++t) {
    Categorical q = model.ntp(full);
    Seed seed = seed_from_context(key, tail_window(trace.tokens, t, context_window));
    std::uint32_t zeta = uniform_symbol(seed, m);
    Categorical row = uniform_modified_ntp(q, zeta, aux);
    std::uint32_t x = sample_categorical(row, rng);
    trace.tokens.push_back(x);
    trace.aux_ids.push_back(zeta);
    trace.redundant_flags.push_back(x == aux.aux_to_token[zeta] ? 0 : 1);
    full.push_back(x);
  }
  return trace;
}

DetectionReport uniform_detect(std::span<const std::uint32_t> text, const WatermarkKey& key,
                               std::size_t vocab_size, std::size_t context_window, double lambda) {
  if (text.empty()) throw std::invalid_argument("uniform_detect: empty text");
  if (context_window == 0 || context_window > 64)
    throw std::invalid_argument("uniform_detect: context window outside 1..64");
  for (std::uint32_t x : text)
    if (x >= vocab_size) throw std::domain_error("uniform_detect: token outside vocab");
  AuxAlphabet aux = derive_aux_alphabet(key, vocab_size);

  DetectionReport rep;
  rep.threshold = lambda;
  std::vector<std::uint32_t> prefix(text.begin(), text.end());
  std::size_t matches = 0;
  for (std::size_t t = 0; t < text.size(); ++t) {
    Seed seed = seed_from_context(key, tail_window(prefix, t, context_window));
    std::uint32_t zeta = uniform_symbol(seed, vocab_size);
    bool match = aux.token_to_aux[text[t]] == zeta;
    rep.per_token_match.push_back(match ? 1 : 0);
    matches += match;
  }
  rep.score = static_cast<double>(matches) / static_cast<double>(text.size());
  rep.decision = rep.score > lambda ? Verdict::watermarked : Verdict::unwatermarked;
  return rep;
}

double uniform_min_type2(const Categorical& q, std::size_t aux_size, double eps) {
  if (aux_size < q.size())
    throw std::invalid_argument("uniform_min_type2: aux alphabet smaller than vocab");
  return project_min_excess(q, 1.0 / static_cast<double>(aux_size), eps).objective;
}

}  // namespace wmlab
