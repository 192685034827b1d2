#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wmlab/dist.hpp"

namespace wmlab {

/// Secret watermark key, 16..64 opaque bytes. Never serialized into outputs.
struct WatermarkKey {
  std::vector<std::uint8_t> bytes;

  static WatermarkKey from_bytes(std::vector<std::uint8_t> b);
  static WatermarkKey from_hex(const std::string& hex);
};

using Seed = std::uint64_t;

/// SipHash-2-4 with a 128-bit key, 64-bit output.
std::uint64_t siphash24(std::uint64_t k0, std::uint64_t k1, std::span<const std::uint8_t> data);

/// Seed for position t from the trailing context window. Canonical input to the
/// PRF: one length byte, each token as big-endian u32, then the key bytes.
/// The byte layout is the compatibility contract; golden vectors pin it.
/// Context length is capped at 64 tokens.
Seed seed_from_context(const WatermarkKey& key, std::span<const std::uint32_t> context);

/// Keyed pseudorandom bijection between tokens 0..m-1 and auxiliary symbols
/// 0..m-1, plus one redundant symbol (id == m) the detector never accepts.
struct AuxAlphabet {
  std::size_t vocab_size = 0;
  std::vector<std::uint32_t> token_to_aux;  // h: token -> symbol
  std::vector<std::uint32_t> aux_to_token;  // h^{-1}: symbol -> token

  std::uint32_t redundant_id() const { return static_cast<std::uint32_t>(vocab_size); }
  std::size_t aux_size() const { return vocab_size + 1; }
};

AuxAlphabet derive_aux_alphabet(const WatermarkKey& key, std::size_t vocab_size);

/// i-th word of the counter-based stream for a seed; each index is
/// independently addressable.
std::uint64_t stream_u64(Seed seed, std::uint64_t counter);

/// Uniform variate in [2^-64, 1 - 2^-53] at stream position `counter`.
double uniform_unit(Seed seed, std::uint64_t counter);

std::vector<double> uniform_vector(Seed seed, std::size_t size);

struct GumbelVector {
  Seed seed;
  std::vector<double> values;  // -log(-log u), u from uniform_unit
};

GumbelVector gumbel_vector(Seed seed, std::size_t size);

/// argmax_i log p[i] + noise[i] over entries with p[i] > 0; zero-probability
/// symbols are never selected. Exact ties break toward the smallest id.
std::size_t gumbel_argmax(const Categorical& p, std::span<const double> noise);

}  // namespace wmlab
