#include "wmlab/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace wmlab {

namespace {

std::span<const std::uint32_t> tail_window(std::span<const std::uint32_t> text,
                                           std::size_t upto, std::size_t n) {
  std::size_t len = std::min(n, upto);
  return text.subspan(upto - len, len);
}

std::size_t green_count_for(double rho, std::size_t m) {
  auto g = static_cast<std::size_t>(std::lround(rho * static_cast<double>(m)));
  if (g == 0 || g >= m)
    throw std::invalid_argument("green_set: rho*m must round into 1..m-1");
  return g;
}

void check_window(std::size_t n) {
  if (n == 0 || n > 64) throw std::invalid_argument("context window outside 1..64");
}

}  // namespace

std::vector<std::uint32_t> green_set(const WatermarkKey& key,
                                     std::span<const std::uint32_t> context,
                                     std::size_t vocab_size, double rho) {
  std::size_t g = green_count_for(rho, vocab_size);
  Seed seed = seed_from_context(key, context);
  std::vector<std::uint32_t> ids(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) ids[i] = static_cast<std::uint32_t>(i);
  std::uint64_t counter = 0;
  for (std::size_t i = vocab_size - 1; i > 0; --i) {
    std::uint64_t j = stream_u64(seed, counter++) % (i + 1);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(g);
  return ids;
}

std::vector<std::uint32_t> kgw_generate(const NgramModel& model,
                                        std::span<const std::uint32_t> prompt,
                                        const WatermarkKey& key, const GreenRedParams& params,
                                        std::size_t seq_len, std::uint64_t rng_seed) {
  check_window(params.context_window);
  const std::size_t m = model.vocab_size();
  green_count_for(params.rho, m);  // validate up front
  std::mt19937_64 rng(rng_seed);

  std::vector<std::uint32_t> out;
  std::vector<std::uint32_t> full(prompt.begin(), prompt.end());
  const double boost = std::exp(params.delta);
  for (std::size_t t = 0; t < seq_len; ++t) {
    Categorical q = model.ntp(full);
    std::vector<std::uint32_t> greens =
        green_set(key, tail_window(out, t, params.context_window), m, params.rho);
    std::vector<double> w = q.probs();
    for (std::uint32_t x : greens) w[x] *= boost;
    std::uint32_t tok = sample_categorical(Categorical::from_weights(w), rng);
    out.push_back(tok);
    full.push_back(tok);
  }
  return out;
}

BaselineReport kgw_detect(std::span<const std::uint32_t> text, const WatermarkKey& key,
                          const GreenRedParams& params, std::size_t vocab_size,
                          double lambda) {
  check_window(params.context_window);
  if (text.empty()) throw std::invalid_argument("kgw_detect: empty text");
  for (std::uint32_t x : text)
    if (x >= vocab_size) throw std::domain_error("kgw_detect: token outside vocab");

  BaselineReport rep;
  rep.threshold = lambda;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < text.size(); ++t) {
    std::vector<std::uint32_t> greens =
        green_set(key, tail_window(text, t, params.context_window), vocab_size, params.rho);
    bool hit = false;
    for (std::uint32_t gtok : greens)
      if (gtok == text[t]) { hit = true; break; }
    rep.per_token_stat.push_back(hit ? 1.0 : 0.0);
    hits += hit;
  }
  const double T = static_cast<double>(text.size());
  rep.score = static_cast<double>(hits) / T;
  rep.zscore = (static_cast<double>(hits) - params.rho * T) /
               std::sqrt(T * params.rho * (1.0 - params.rho));
  rep.decision = rep.score >= lambda;  // count >= lambda * T
  return rep;
}

std::vector<std::uint32_t> gumbelmax_generate(const NgramModel& model,
                                              std::span<const std::uint32_t> prompt,
                                              const WatermarkKey& key,
                                              std::size_t context_window, std::size_t seq_len) {
  check_window(context_window);
  const std::size_t m = model.vocab_size();
  std::vector<std::uint32_t> out;
  std::vector<std::uint32_t> full(prompt.begin(), prompt.end());
  for (std::size_t t = 0; t < seq_len; ++t) {
    Categorical q = model.ntp(full);
    Seed seed = seed_from_context(key, tail_window(out, t, context_window));
    GumbelVector noise = gumbel_vector(seed, m);
    auto tok = static_cast<std::uint32_t>(gumbel_argmax(q, noise.values));
    out.push_back(tok);
    full.push_back(tok);
  }
  return out;
}

BaselineReport gumbelmax_detect(std::span<const std::uint32_t> text, const WatermarkKey& key,
                                std::size_t vocab_size, std::size_t context_window,
                                double lambda) {
  check_window(context_window);
  if (text.empty()) throw std::invalid_argument("gumbelmax_detect: empty text");
  for (std::uint32_t x : text)
    if (x >= vocab_size) throw std::domain_error("gumbelmax_detect: token outside vocab");

  BaselineReport rep;
  rep.threshold = lambda;
  double total = 0.0;
  for (std::size_t t = 0; t < text.size(); ++t) {
    Seed seed = seed_from_context(key, tail_window(text, t, context_window));
    double u = uniform_unit(seed, text[t]);
    double stat = -std::log1p(-u);
    rep.per_token_stat.push_back(stat);
    total += stat;
  }
  rep.score = total / static_cast<double>(text.size());
  rep.decision = rep.score >= lambda;
  return rep;
}

}  // namespace wmlab
