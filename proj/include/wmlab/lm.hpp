#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wmlab/dist.hpp"

namespace wmlab {

/// Order-n language model with additive smoothing. Counts are kept for every
/// context length 0..order; prediction uses the longest observed suffix and
/// backs off toward the unigram table.
class NgramModel {
 public:
  using Context = std::vector<std::uint32_t>;
  using CountTable = std::map<Context, std::map<std::uint32_t, std::uint64_t>>;

  static NgramModel train(const std::vector<std::vector<std::uint32_t>>& corpus,
                          std::size_t order, double smoothing, std::size_t vocab_size = 0);
  static NgramModel from_counts(std::size_t order, std::size_t vocab_size, double smoothing,
                                CountTable counts);

  /// Next-token distribution given a prefix; depends only on the trailing
  /// `order` tokens.
  Categorical ntp(std::span<const std::uint32_t> prefix) const;

  std::vector<std::uint32_t> sample_sequence(std::span<const std::uint32_t> prompt,
                                             std::size_t length, std::uint64_t rng_seed) const;

  /// Monte-Carlo estimate of bits per token over `samples` fresh sequences of
  /// the given length.
  double entropy_rate(std::size_t samples, std::size_t length, std::uint64_t rng_seed) const;

  std::size_t order() const { return order_; }
  std::size_t vocab_size() const { return vocab_size_; }
  double smoothing() const { return smoothing_; }
  const CountTable& counts() const { return counts_; }

  std::string to_json() const;
  static NgramModel from_json(const std::string& text);
  static NgramModel load(const std::string& path);
  void save(const std::string& path) const;

 private:
  NgramModel(std::size_t order, std::size_t vocab_size, double smoothing, CountTable counts);
  void validate_prefix(std::span<const std::uint32_t> prefix) const;

  std::size_t order_ = 0;
  std::size_t vocab_size_ = 0;
  double smoothing_ = 1.0;
  CountTable counts_;
  std::map<Context, std::uint64_t> totals_;
};

}  // namespace wmlab
