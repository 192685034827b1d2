#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmlab/dist.hpp"
#include "wmlab/lm.hpp"
#include "wmlab/prg.hpp"
#include "wmlab/token_wm.hpp"

namespace wmlab {

/// Conditional token law given auxiliary symbol zeta under the coupling whose
/// auxiliary marginal is exactly uniform and whose token marginal is exactly q.
/// With z the symbol's preimage token: q uniform yields a point mass on z;
/// otherwise mass m*min(q(z), 1/m) on z and mass proportional to
/// (q(x) - 1/m)+ * (1/m - q(z))+ elsewhere.
Categorical uniform_modified_ntp(const Categorical& q, std::uint32_t zeta, const AuxAlphabet& aux);

/// Full coupling table, row-major over (token, symbol); both alphabets have
/// size m (no redundant symbol in this variant).
struct UniformCoupling {
  std::size_t m = 0;
  std::vector<double> joint;
  double at(std::size_t x, std::size_t z) const { return joint[x * m + z]; }
};

UniformCoupling build_uniform_coupling(const Categorical& q, const AuxAlphabet& aux);

/// Symbol drawn uniformly from the context seed, token drawn from the coupling
/// row. The trace's flags mark positions where the token is not the symbol's
/// preimage (the off-diagonal of the coupling).
GenerationTrace uniform_generate(const NgramModel& model, std::span<const std::uint32_t> prompt,
                                 const WatermarkKey& key, std::size_t seq_len,
                                 std::size_t context_window, std::uint64_t rng_seed);

/// Needs no surrogate: replays the uniform symbols from the seeds and scores
/// the preimage match rate, which is exactly 1/m per position on key-independent
/// text.
DetectionReport uniform_detect(std::span<const std::uint32_t> text, const WatermarkKey& key,
                               std::size_t vocab_size, std::size_t context_window, double lambda);

/// Minimum Type-II with a uniform auxiliary marginal over aux_size symbols:
/// the excess-mass program at threshold 1/aux_size.
double uniform_min_type2(const Categorical& q, std::size_t aux_size, double eps);

}  // namespace wmlab
