#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmlab/dist.hpp"
#include "wmlab/lm.hpp"
#include "wmlab/prg.hpp"

namespace wmlab {

struct SchemeParams {
  double eta = 0.2;              // per-token detectable-mass cap
  double lambda = 0.5;           // score threshold, fraction of positions
  std::size_t context_window = 2;  // tokens hashed into each seed
  std::size_t seq_len = 200;       // generation length
};

struct GenerationTrace {
  std::vector<std::uint32_t> tokens;
  std::vector<std::uint32_t> aux_ids;
  std::vector<std::uint8_t> redundant_flags;

  std::size_t redundant_count() const;
};

enum class Verdict { unwatermarked, watermarked };

struct DetectionReport {
  std::vector<std::uint8_t> per_token_match;
  double score = 0.0;
  double threshold = 0.0;
  Verdict decision = Verdict::unwatermarked;
  std::size_t redundant_count = 0;  // positions whose reconstructed symbol was redundant
};

/// Auxiliary-symbol distribution induced by q: capped mass min(q(x), eta) on
/// x's symbol, the total overflow sum (q - eta)+ on the redundant symbol.
Categorical build_aux_dist(const Categorical& q, const AuxAlphabet& aux, double eta);

/// Conditional token law when the redundant symbol is drawn: (q - eta)+
/// normalized. Requires some mass above eta.
Categorical residual_dist(const Categorical& q, double eta);

/// Watermarked sampling: at each position the auxiliary symbol is drawn by a
/// Gumbel argmax keyed on the trailing generated-token window, and the token is
/// its preimage, or a residual draw when the symbol is redundant. The prompt
/// conditions the model but never enters the seeds, since detection sees only
/// the text.
GenerationTrace generate(const NgramModel& model, std::span<const std::uint32_t> prompt,
                         const WatermarkKey& key, const SchemeParams& params,
                         std::uint64_t rng_seed);

/// Detection never sees the generating model; a surrogate replays the auxiliary
/// choices and the score is the fraction of positions whose token maps to the
/// replayed symbol. Flags watermarked iff score strictly exceeds lambda.
DetectionReport detect(const NgramModel& surrogate, std::span<const std::uint32_t> text,
                       const WatermarkKey& key, const SchemeParams& params);

/// ceil(T * lambda) with a guard against representation error in T * lambda.
std::size_t match_count_threshold(std::size_t seq_len, double lambda);

/// Largest eta with C(T,k) eta^k <= alpha at k = match_count_threshold, capped
/// at 1. Evaluated in log space.
double calibrate_eta(double alpha, std::size_t seq_len, double lambda);

/// Worst-case sequence-level false-alarm bound min(1, C(T,k) eta^k).
double sequence_fpr_bound(std::size_t seq_len, double eta, double lambda);

struct ReplaceableEstimate {
  double analytic = 0.0;     // mean over traces of sum_t (q_t - eta)+ total
  double empirical = 0.0;    // mean redundant count
  double diff_stddev = 0.0;  // sample stddev of per-trace (empirical - analytic)
  std::size_t num_traces = 0;
};

/// Expected number of freely replaceable positions per trace, analytically and
/// by counting redundant draws on the same traces.
ReplaceableEstimate expected_replaceable(const NgramModel& model,
                                         std::span<const std::uint32_t> prompt,
                                         const WatermarkKey& key, const SchemeParams& params,
                                         std::size_t num_traces, std::uint64_t rng_seed);

}  // namespace wmlab
