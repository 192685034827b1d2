#include "wmlab/lm.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace wmlab {

NgramModel::NgramModel(std::size_t order, std::size_t vocab_size, double smoothing,
                       CountTable counts)
    : order_(order), vocab_size_(vocab_size), smoothing_(smoothing), counts_(std::move(counts)) {
  if (vocab_size_ == 0) throw std::invalid_argument("NgramModel: empty vocab");
  if (!(smoothing_ > 0.0)) throw std::invalid_argument("NgramModel: smoothing must be positive");
  for (const auto& [ctx, row] : counts_) {
    if (ctx.size() > order_) throw std::invalid_argument("NgramModel: context longer than order");
    std::uint64_t tot = 0;
    for (const auto& [tok, cnt] : row) {
      if (tok >= vocab_size_) throw std::invalid_argument("NgramModel: token id outside vocab");
      tot += cnt;
    }
    for (std::uint32_t t : ctx)
      if (t >= vocab_size_) throw std::invalid_argument("NgramModel: context token outside vocab");
    totals_[ctx] = tot;
  }
}

NgramModel NgramModel::train(const std::vector<std::vector<std::uint32_t>>& corpus,
                             std::size_t order, double smoothing, std::size_t vocab_size) {
  if (corpus.empty()) throw std::invalid_argument("NgramModel::train: empty corpus");
  bool any = false;
  std::uint32_t max_id = 0;
  for (const auto& seq : corpus)
    for (std::uint32_t t : seq) {
      any = true;
      max_id = std::max(max_id, t);
    }
  if (!any) throw std::invalid_argument("NgramModel::train: empty corpus");
  std::size_t vocab = vocab_size ? vocab_size : static_cast<std::size_t>(max_id) + 1;
  if (max_id >= vocab) throw std::invalid_argument("NgramModel::train: token id outside vocab");

  CountTable counts;
  for (const auto& seq : corpus) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      for (std::size_t k = 0; k <= order && k <= t; ++k) {
        Context ctx(seq.begin() + (t - k), seq.begin() + t);
        ++counts[ctx][seq[t]];
      }
    }
  }
  return NgramModel(order, vocab, smoothing, std::move(counts));
}

NgramModel NgramModel::from_counts(std::size_t order, std::size_t vocab_size, double smoothing,
                                   CountTable counts) {
  return NgramModel(order, vocab_size, smoothing, std::move(counts));
}

void NgramModel::validate_prefix(std::span<const std::uint32_t> prefix) const {
  for (std::uint32_t t : prefix)
    if (t >= vocab_size_) throw std::domain_error("NgramModel: prefix token outside vocab");
}

Categorical NgramModel::ntp(std::span<const std::uint32_t> prefix) const {
  validate_prefix(prefix);
  const double m = static_cast<double>(vocab_size_);
  std::size_t start = order_ < prefix.size() ? prefix.size() - order_ : 0;
  for (std::size_t s = start; s <= prefix.size(); ++s) {
    Context ctx(prefix.begin() + s, prefix.end());
    auto it = counts_.find(ctx);
    if (it == counts_.end()) continue;
    double denom = static_cast<double>(totals_.at(ctx)) + smoothing_ * m;
    std::vector<double> p(vocab_size_, smoothing_ / denom);
    for (const auto& [tok, cnt] : it->second)
      p[tok] = (static_cast<double>(cnt) + smoothing_) / denom;
    return Categorical(std::move(p));
  }
  return Categorical::uniform(vocab_size_);  // nothing observed at any length
}

std::vector<std::uint32_t> NgramModel::sample_sequence(std::span<const std::uint32_t> prompt,
                                                       std::size_t length,
                                                       std::uint64_t rng_seed) const {
  validate_prefix(prompt);
  std::mt19937_64 rng(rng_seed);
  std::vector<std::uint32_t> full(prompt.begin(), prompt.end());
  std::vector<std::uint32_t> out;
  out.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    Categorical q = ntp(full);
    std::uint32_t x = sample_categorical(q, rng);
    full.push_back(x);
    out.push_back(x);
  }
  return out;
}

double NgramModel::entropy_rate(std::size_t samples, std::size_t length,
                                std::uint64_t rng_seed) const {
  if (samples == 0 || length == 0)
    throw std::invalid_argument("entropy_rate: need samples and length");
  std::mt19937_64 rng(rng_seed);
  double bits = 0.0;
  std::vector<std::uint32_t> seq;
  for (std::size_t s = 0; s < samples; ++s) {
    seq.clear();
    for (std::size_t t = 0; t < length; ++t) {
      Categorical q = ntp(seq);
      std::uint32_t x = sample_categorical(q, rng);
      bits -= std::log2(q[x]);
      seq.push_back(x);
    }
  }
  return bits / (static_cast<double>(samples) * static_cast<double>(length));
}

std::string NgramModel::to_json() const {
  nlohmann::json j;
  j["order"] = order_;
  j["vocab_size"] = vocab_size_;
  j["smoothing"] = smoothing_;
  nlohmann::json jc = nlohmann::json::object();
  for (const auto& [ctx, row] : counts_) {
    std::string key;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      if (i) key += ',';
      key += std::to_string(ctx[i]);
    }
    nlohmann::json jrow = nlohmann::json::object();
    for (const auto& [tok, cnt] : row) jrow[std::to_string(tok)] = cnt;
    jc[key] = std::move(jrow);
  }
  j["counts"] = std::move(jc);
  return j.dump();
}

NgramModel NgramModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("order") || !j.contains("vocab_size") || !j.contains("smoothing") ||
      !j.contains("counts"))
    throw std::invalid_argument("NgramModel: missing model fields");
  CountTable counts;
  auto parse_u32 = [](const std::string& s) -> std::uint32_t {
    std::size_t pos = 0;
    unsigned long v = std::stoul(s, &pos);
    if (pos != s.size() || v > 0xFFFFFFFFul)
      throw std::invalid_argument("NgramModel: bad token id in counts");
    return static_cast<std::uint32_t>(v);
  };
  for (const auto& [key, row] : j.at("counts").items()) {
    Context ctx;
    if (!key.empty()) {
      std::stringstream ss(key);
      std::string part;
      while (std::getline(ss, part, ',')) ctx.push_back(parse_u32(part));
    }
    auto& dst = counts[ctx];
    for (const auto& [tok, cnt] : row.items())
      dst[parse_u32(tok)] = cnt.get<std::uint64_t>();
  }
  return NgramModel(j.at("order").get<std::size_t>(), j.at("vocab_size").get<std::size_t>(),
                    j.at("smoothing").get<double>(), std::move(counts));
}

NgramModel NgramModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("NgramModel: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void NgramModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("NgramModel: cannot write " + path);
  out << to_json() << '\n';
}

}  // namespace wmlab
