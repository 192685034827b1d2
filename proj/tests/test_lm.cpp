#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "wmlab/lm.hpp"

using namespace wmlab;

namespace {

NgramModel alternation_model(double smoothing) {
  return NgramModel::train({{0, 1, 0, 1, 0, 1}}, 1, smoothing);
}

}  // namespace

TEST_CASE("training validates inputs") {
  CHECK_THROWS(NgramModel::train({}, 1, 1.0));
  CHECK_THROWS(NgramModel::train({{0, 1}}, 1, 0.0));   // smoothing must be positive
  CHECK_THROWS(NgramModel::train({{0, 1}}, 1, -1.0));
  CHECK_THROWS(NgramModel::train({{0, 3}}, 1, 1.0, 2));  // token outside declared vocab
}

TEST_CASE("deterministic alternation dominates as smoothing vanishes") {
  NgramModel m = alternation_model(1e-9);
  std::vector<std::uint32_t> zero{0};
  CHECK(m.ntp(zero)[1] == doctest::Approx(1.0).epsilon(1e-6));
  std::vector<std::uint32_t> one{1};
  CHECK(m.ntp(one)[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("unigram training recovers uniform frequencies") {
  std::mt19937_64 rng(12);
  std::vector<std::vector<std::uint32_t>> corpus(1);
  const std::size_t n = 40000;
  for (std::size_t i = 0; i < n; ++i)
    corpus[0].push_back(static_cast<std::uint32_t>(rng() % 4));
  NgramModel m = NgramModel::train(corpus, 0, 1e-6);
  Categorical u = m.ntp({});
  double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(n));
  for (std::size_t t = 0; t < 4; ++t) CHECK(std::abs(u[t] - 0.25) < 3.0 * sigma);
}

TEST_CASE("unseen contexts back off instead of failing") {
  NgramModel m = NgramModel::train({{0, 1, 2}}, 2, 0.5, 5);
  std::vector<std::uint32_t> unseen{4, 4};
  Categorical ntp = m.ntp(unseen);
  double total = 0.0;
  for (std::size_t t = 0; t < 5; ++t) total += ntp[t];
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS(m.ntp(std::vector<std::uint32_t>{9}));  // invalid token id
}

TEST_CASE("ntp respects the markov property") {
  std::mt19937_64 rng(77);
  std::vector<std::vector<std::uint32_t>> corpus(20);
  for (auto& seq : corpus)
    for (int i = 0; i < 50; ++i) seq.push_back(static_cast<std::uint32_t>(rng() % 6));
  NgramModel m = NgramModel::train(corpus, 2, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint32_t> prefix;
    for (int i = 0; i < 8; ++i) prefix.push_back(static_cast<std::uint32_t>(rng() % 6));
    std::vector<std::uint32_t> suffix(prefix.end() - 2, prefix.end());
    Categorical a = m.ntp(prefix), b = m.ntp(suffix);
    for (std::size_t t = 0; t < 6; ++t) CHECK(a[t] == b[t]);
  }

  NgramModel uni = NgramModel::train(corpus, 0, 0.3);
  std::vector<std::uint32_t> p1{1}, p2{3, 4};
  Categorical a = uni.ntp(p1), b = uni.ntp(p2), c = uni.ntp({});
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(a[t] == c[t]);
    CHECK(b[t] == c[t]);
  }
}

TEST_CASE("hand-built count table is looked up directly") {
  NgramModel::CountTable counts;
  counts[{}] = {{0, 1}, {1, 1}};
  counts[{0}] = {{0, 9}, {1, 1}};
  NgramModel m = NgramModel::from_counts(1, 2, 1e-9, counts);
  std::vector<std::uint32_t> ctx{1, 0};  // trailing suffix {0} is the table key
  CHECK(m.ntp(ctx)[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(m.ntp(ctx)[1] == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("sampling follows the chain and the seed") {
  NgramModel m = alternation_model(1e-9);
  std::vector<std::uint32_t> prompt{0};
  CHECK(m.sample_sequence(prompt, 4, 1) == std::vector<std::uint32_t>{1, 0, 1, 0});
  NgramModel::CountTable sk;
  sk[{}] = {{0, 7}, {1, 3}};
  NgramModel skewed = NgramModel::from_counts(0, 2, 1e-9, sk);
  std::size_t zeros = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) zeros += skewed.sample_sequence({}, 1, i)[0] == 0;
  double sigma = std::sqrt(0.7 * 0.3 / static_cast<double>(n));
  CHECK(std::abs(static_cast<double>(zeros) / n - 0.7) < 3.0 * sigma);
  CHECK(m.sample_sequence(prompt, 10, 42) == m.sample_sequence(prompt, 10, 42));
}

TEST_CASE("entropy rate pinned values") {
  // the untrained empty context is uniform, so every sample pays exactly one
  // bit for its first token and the alternation is free after that
  NgramModel chain = alternation_model(1e-9);
  CHECK(chain.entropy_rate(20, 40, 3) == doctest::Approx(1.0 / 40.0).epsilon(1e-4));

  NgramModel::CountTable uni16;
  for (std::uint32_t t = 0; t < 16; ++t) uni16[{}][t] = 1;
  NgramModel flat = NgramModel::from_counts(0, 16, 1e-12, uni16);
  CHECK(flat.entropy_rate(50, 100, 5) == doctest::Approx(4.0).epsilon(0.0125));

  NgramModel::CountTable half;
  half[{}] = {{0, 2}, {1, 1}, {2, 1}};
  NgramModel skew = NgramModel::from_counts(0, 3, 1e-12, half);
  CHECK(skew.entropy_rate(200, 100, 5) == doctest::Approx(1.5).epsilon(1.0 / 30.0));
}

TEST_CASE("json round trip is exact") {
  std::mt19937_64 rng(31);
  std::vector<std::vector<std::uint32_t>> corpus(10);
  for (auto& seq : corpus)
    for (int i = 0; i < 30; ++i) seq.push_back(static_cast<std::uint32_t>(rng() % 9));
  NgramModel m = NgramModel::train(corpus, 2, 0.25);

  NgramModel back = NgramModel::from_json(m.to_json());
  CHECK(back.order() == m.order());
  CHECK(back.vocab_size() == m.vocab_size());
  CHECK(back.smoothing() == m.smoothing());
  CHECK(back.counts() == m.counts());
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::uint32_t> prefix;
    for (int i = 0; i < 3; ++i) prefix.push_back(static_cast<std::uint32_t>(rng() % 9));
    Categorical a = m.ntp(prefix), b = back.ntp(prefix);
    for (std::size_t t = 0; t < 9; ++t) CHECK(a[t] == b[t]);  // bitwise equal
  }

  std::filesystem::path tmp = std::filesystem::temp_directory_path() / "wmlab_lm_roundtrip.json";
  m.save(tmp.string());
  NgramModel loaded = NgramModel::load(tmp.string());
  CHECK(loaded.counts() == m.counts());
  std::filesystem::remove(tmp);
}
