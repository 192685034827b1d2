#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmlab/dist.hpp"
#include "wmlab/lm.hpp"
#include "wmlab/prg.hpp"

namespace wmlab {

struct GreenRedParams {
  double rho = 0.5;            // green fraction; rho*m must round into 1..m-1
  double delta = 2.0;          // log-boost applied to green tokens
  std::size_t context_window = 1;
};

/// Per-position green sets are drawn from the same context seeds the other
/// schemes use, so comparisons isolate the scheme rather than the PRF.
std::vector<std::uint32_t> green_set(const WatermarkKey& key,
                                     std::span<const std::uint32_t> context,
                                     std::size_t vocab_size, double rho);

std::vector<std::uint32_t> kgw_generate(const NgramModel& model,
                                        std::span<const std::uint32_t> prompt,
                                        const WatermarkKey& key, const GreenRedParams& params,
                                        std::size_t seq_len, std::uint64_t rng_seed);

struct BaselineReport {
  std::vector<double> per_token_stat;
  double score = 0.0;      // mean per-token statistic
  double threshold = 0.0;  // on the same scale as score
  bool decision = false;
  double zscore = 0.0;     // green-count z-score; zero for the Gumbel baseline
};

/// Green-hit counting detector; score is the green fraction, zscore the
/// standard normal approximation (count - rho T) / sqrt(T rho (1-rho)).
BaselineReport kgw_detect(std::span<const std::uint32_t> text, const WatermarkKey& key,
                          const GreenRedParams& params, std::size_t vocab_size,
                          double lambda);

/// Vanilla exponential-race sampling: token = argmax log q + Gumbel noise from
/// the context seed. Fully deterministic given key and context.
std::vector<std::uint32_t> gumbelmax_generate(const NgramModel& model,
                                              std::span<const std::uint32_t> prompt,
                                              const WatermarkKey& key,
                                              std::size_t context_window, std::size_t seq_len);

/// Score is the mean of -log(1 - u_t(x_t)); about 1 on key-independent text,
/// inflated on watermarked text.
BaselineReport gumbelmax_detect(std::span<const std::uint32_t> text, const WatermarkKey& key,
                                std::size_t vocab_size, std::size_t context_window,
                                double lambda);

}  // namespace wmlab
