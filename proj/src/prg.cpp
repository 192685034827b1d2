#include "wmlab/prg.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace wmlab {

namespace {

// Fixed PRF key halves. Secret material enters through the hashed message, so
// these only provide domain separation; the serialized layout is the contract.
constexpr std::uint64_t kPrfK0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kPrfK1 = 0xD1B54A32D192ED03ULL;
constexpr std::size_t kMaxContext = 64;

inline std::uint64_t rotl(std::uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }

inline void sipround(std::uint64_t& v0, std::uint64_t& v1, std::uint64_t& v2, std::uint64_t& v3) {
  v0 += v1; v1 = rotl(v1, 13); v1 ^= v0; v0 = rotl(v0, 32);
  v2 += v3; v3 = rotl(v3, 16); v3 ^= v2;
  v0 += v3; v3 = rotl(v3, 21); v3 ^= v0;
  v2 += v1; v1 = rotl(v1, 17); v1 ^= v2; v2 = rotl(v2, 32);
}

}  // namespace

WatermarkKey WatermarkKey::from_bytes(std::vector<std::uint8_t> b) {
  if (b.size() < 16 || b.size() > 64)
    throw std::invalid_argument("WatermarkKey: key must be 16..64 bytes");
  return WatermarkKey{std::move(b)};
}

WatermarkKey WatermarkKey::from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("WatermarkKey: odd hex length");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("WatermarkKey: bad hex digit");
  };
  std::vector<std::uint8_t> b(hex.size() / 2);
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] = static_cast<std::uint8_t>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
  return from_bytes(std::move(b));
}

std::uint64_t siphash24(std::uint64_t k0, std::uint64_t k1, std::span<const std::uint8_t> data) {
  std::uint64_t v0 = 0x736f6d6570736575ULL ^ k0;
  std::uint64_t v1 = 0x646f72616e646f6dULL ^ k1;
  std::uint64_t v2 = 0x6c7967656e657261ULL ^ k0;
  std::uint64_t v3 = 0x7465646279746573ULL ^ k1;

  const std::size_t len = data.size();
  const std::size_t end = len - (len % 8);
  for (std::size_t off = 0; off < end; off += 8) {
    std::uint64_t m = 0;
    for (int i = 7; i >= 0; --i) m = (m << 8) | data[off + i];  // little-endian word
    v3 ^= m;
    sipround(v0, v1, v2, v3);
    sipround(v0, v1, v2, v3);
    v0 ^= m;
  }
  std::uint64_t tail = static_cast<std::uint64_t>(len & 0xff) << 56;
  for (std::size_t i = 0; i < len - end; ++i)
    tail |= static_cast<std::uint64_t>(data[end + i]) << (8 * i);
  v3 ^= tail;
  sipround(v0, v1, v2, v3);
  sipround(v0, v1, v2, v3);
  v0 ^= tail;

  v2 ^= 0xff;
  sipround(v0, v1, v2, v3);
  sipround(v0, v1, v2, v3);
  sipround(v0, v1, v2, v3);
  sipround(v0, v1, v2, v3);
  return v0 ^ v1 ^ v2 ^ v3;
}

Seed seed_from_context(const WatermarkKey& key, std::span<const std::uint32_t> context) {
  if (key.bytes.empty()) throw std::invalid_argument("seed_from_context: empty key");
  if (context.size() > kMaxContext)
    throw std::invalid_argument("seed_from_context: context longer than 64 tokens");
  std::vector<std::uint8_t> buf;
  buf.reserve(1 + 4 * context.size() + key.bytes.size());
  buf.push_back(static_cast<std::uint8_t>(context.size()));
  for (std::uint32_t t : context) {
    buf.push_back(static_cast<std::uint8_t>(t >> 24));
    buf.push_back(static_cast<std::uint8_t>(t >> 16));
    buf.push_back(static_cast<std::uint8_t>(t >> 8));
    buf.push_back(static_cast<std::uint8_t>(t));
  }
  buf.insert(buf.end(), key.bytes.begin(), key.bytes.end());
  return siphash24(kPrfK0, kPrfK1, buf);
}

AuxAlphabet derive_aux_alphabet(const WatermarkKey& key, std::size_t vocab_size) {
  if (vocab_size == 0) throw std::invalid_argument("derive_aux_alphabet: empty vocab");
  if (vocab_size > 0xFFFFFFFFull - 1)
    throw std::invalid_argument("derive_aux_alphabet: vocab too large");
  // Domain tag 0xFF cannot collide with a context serialization, whose first
  // byte is a length <= 64.
  std::vector<std::uint8_t> buf;
  buf.reserve(5 + key.bytes.size());
  buf.push_back(0xFF);
  std::uint32_t m32 = static_cast<std::uint32_t>(vocab_size);
  buf.push_back(static_cast<std::uint8_t>(m32 >> 24));
  buf.push_back(static_cast<std::uint8_t>(m32 >> 16));
  buf.push_back(static_cast<std::uint8_t>(m32 >> 8));
  buf.push_back(static_cast<std::uint8_t>(m32));
  buf.insert(buf.end(), key.bytes.begin(), key.bytes.end());
  Seed seed = siphash24(kPrfK0, kPrfK1, buf);

  AuxAlphabet aux;
  aux.vocab_size = vocab_size;
  aux.token_to_aux.resize(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i)
    aux.token_to_aux[i] = static_cast<std::uint32_t>(i);
  std::uint64_t counter = 0;
  for (std::size_t i = vocab_size - 1; i > 0; --i) {
    std::uint64_t j = stream_u64(seed, counter++) % (i + 1);
    std::swap(aux.token_to_aux[i], aux.token_to_aux[j]);
  }
  aux.aux_to_token.resize(vocab_size);
  for (std::size_t t = 0; t < vocab_size; ++t) aux.aux_to_token[aux.token_to_aux[t]] = static_cast<std::uint32_t>(t);
  return aux;
}

std::uint64_t stream_u64(Seed seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform_unit(Seed seed, std::uint64_t counter) {
  double u = static_cast<double>(stream_u64(seed, counter) >> 11) * 0x1.0p-53;
  if (u < 0x1.0p-64) u = 0x1.0p-64;
  if (u > 1.0 - 0x1.0p-53) u = 1.0 - 0x1.0p-53;
  return u;
}

std::vector<double> uniform_vector(Seed seed, std::size_t size) {
  std::vector<double> v(size);
  for (std::size_t i = 0; i < size; ++i) v[i] = uniform_unit(seed, i);
  return v;
}

GumbelVector gumbel_vector(Seed seed, std::size_t size) {
  GumbelVector g{seed, std::vector<double>(size)};
  for (std::size_t i = 0; i < size; ++i)
    g.values[i] = -std::log(-std::log(uniform_unit(seed, i)));
  return g;
}

std::size_t gumbel_argmax(const Categorical& p, std::span<const double> noise) {
  if (noise.size() != p.size()) throw std::invalid_argument("gumbel_argmax: size mismatch");
  std::size_t best = p.size();
  double best_score = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    double score = std::log(p[i]) + noise[i];
    if (best == p.size() || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best == p.size()) throw std::domain_error("gumbel_argmax: no positive mass");
  return best;
}

}  // namespace wmlab
