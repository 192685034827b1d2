// wmlab: train n-gram sources, generate watermarked token sequences, detect,
// attack, evaluate, and run the small-instance optimality verifiers.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmlab/baselines.hpp"
#include "wmlab/dist.hpp"
#include "wmlab/eval.hpp"
#include "wmlab/frobust.hpp"
#include "wmlab/io.hpp"
#include "wmlab/lm.hpp"
#include "wmlab/prg.hpp"
#include "wmlab/seq_opt.hpp"
#include "wmlab/token_wm.hpp"
#include "wmlab/uniform_wm.hpp"

namespace {

using namespace wmlab;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::uint32_t> parse_tokens(const std::string& line) {
  std::vector<std::uint32_t> out;
  std::string piece;
  std::istringstream is(line);
  while (is >> piece) {
    if (!piece.empty() && piece.back() == ',') piece.pop_back();
    if (piece.empty()) continue;
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(piece, &used);
    } catch (const std::exception&) {
      throw UsageError("not a token id: '" + piece + "'");
    }
    if (used != piece.size()) throw UsageError("not a token id: '" + piece + "'");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open corpus: " + path);
  std::vector<std::vector<std::uint32_t>> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      corpus.push_back(parse_tokens(line));
    } catch (const UsageError& e) {
      throw UsageError("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (corpus.empty()) throw UsageError("empty corpus: " + path);
  return corpus;
}

WatermarkKey load_key(const std::string& hex, const std::string& file) {
  if (hex.empty() == file.empty())
    throw UsageError("supply exactly one of --key-hex / --key-file");
  if (!hex.empty()) return WatermarkKey::from_hex(hex);
  std::ifstream in(file, std::ios::binary);
  if (!in) throw UsageError("cannot open key file: " + file);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return WatermarkKey::from_bytes(std::move(bytes));
}

NgramModel load_model(const std::string& path) {
  try {
    return NgramModel::load(path);
  } catch (const std::exception& e) {
    throw UsageError("cannot load model '" + path + "': " + e.what());
  }
}

// Dirichlet(1) draw through the counter stream; deterministic per (seed, m).
Categorical random_dist(Seed seed, std::size_t m) {
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = -std::log(uniform_unit(seed, i));
  return Categorical::from_weights(w);
}

WatermarkKey builtin_verify_key() {
  return WatermarkKey::from_hex("746573742d6b65792d30313233343536373839616263646566303132333435");
}

std::string decision_str(bool watermarked) { return watermarked ? "watermarked" : "unwatermarked"; }

// ---------------------------------------------------------------- train-lm

struct TrainOpts {
  std::string corpus, out;
  std::size_t order = 1;
  double smoothing = 1.0;
  std::size_t vocab = 0;
};

int cmd_train_lm(const TrainOpts& o) {
  auto corpus = read_corpus(o.corpus);
  NgramModel model = NgramModel::train(corpus, o.order, o.smoothing, o.vocab);
  model.save(o.out);
  std::cout << "trained order=" << model.order() << " vocab=" << model.vocab_size()
            << " sequences=" << corpus.size() << " -> " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- generate

struct GenOpts {
  std::string model, scheme = "optimal", key_hex, key_file, out, prompt;
  std::size_t num = 100, seq_len = 200, window = 2, prompt_len = 0;
  double eta = 0.2, lambda = 0.5, rho = 0.5, delta = 2.0;
  std::uint64_t seed = 0;
};

bool needs_key(const std::string& scheme) { return scheme != "human"; }

int cmd_generate(const GenOpts& o) {
  NgramModel model = load_model(o.model);
  WatermarkKey key;
  if (needs_key(o.scheme)) key = load_key(o.key_hex, o.key_file);
  std::vector<std::uint32_t> fixed_prompt = parse_tokens(o.prompt);
  for (std::uint32_t t : fixed_prompt)
    if (t >= model.vocab_size()) throw UsageError("prompt token outside model vocab");
  if (!fixed_prompt.empty() && o.prompt_len > 0)
    throw UsageError("--prompt and --prompt-len are mutually exclusive");

  JsonlFile out;
  out.header = {{"type", "sequences"},
                {"scheme", o.scheme},
                {"vocab_size", model.vocab_size()},
                {"seq_len", o.seq_len},
                {"num_sequences", o.num},
                {"run_seed", o.seed},
                {"context_window", o.window}};
  if (o.scheme == "optimal") out.header["eta"] = o.eta;
  if (o.scheme == "kgw") {
    out.header["rho"] = o.rho;
    out.header["delta"] = o.delta;
  }

  Seed prompt_lane = stream_u64(o.seed, 0x70726f6d70ULL);
  for (std::size_t i = 0; i < o.num; ++i) {
    std::uint64_t rng_seed = stream_u64(o.seed, i);
    std::vector<std::uint32_t> prompt = fixed_prompt;
    if (o.prompt_len > 0)
      prompt = model.sample_sequence({}, o.prompt_len, stream_u64(prompt_lane, i));

    nlohmann::json rec;
    rec["id"] = i;
    if (o.scheme == "optimal") {
      SchemeParams p{o.eta, o.lambda, o.window, o.seq_len};
      GenerationTrace tr = generate(model, prompt, key, p, rng_seed);
      rec["tokens"] = tr.tokens;
      rec["redundant_count"] = tr.redundant_count();
    } else if (o.scheme == "uniform") {
      GenerationTrace tr = uniform_generate(model, prompt, key, o.seq_len, o.window, rng_seed);
      rec["tokens"] = tr.tokens;
      rec["redundant_count"] = tr.redundant_count();
    } else if (o.scheme == "kgw") {
      GreenRedParams p{o.rho, o.delta, o.window};
      rec["tokens"] = kgw_generate(model, prompt, key, p, o.seq_len, rng_seed);
    } else if (o.scheme == "gumbelmax") {
      rec["tokens"] = gumbelmax_generate(model, prompt, key, o.window, o.seq_len);
    } else if (o.scheme == "human") {
      rec["tokens"] = model.sample_sequence(prompt, o.seq_len, rng_seed);
    } else {
      throw UsageError("unknown scheme: " + o.scheme);
    }
    out.records.push_back(std::move(rec));
  }
  write_jsonl(o.out, out);
  std::cout << "wrote " << o.num << " sequences -> " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- detect

struct DetectOpts {
  std::string in, out, scheme = "optimal", key_hex, key_file, surrogate;
  std::size_t window = 2, vocab = 0;
  double eta = 0.2, lambda = 0.5, rho = 0.5, delta = 2.0;
};

int cmd_detect(const DetectOpts& o) {
  JsonlFile in = read_jsonl(o.in);
  WatermarkKey key = load_key(o.key_hex, o.key_file);
  std::size_t vocab = o.vocab;
  if (vocab == 0 && in.header.contains("vocab_size"))
    vocab = in.header["vocab_size"].get<std::size_t>();
  if (vocab == 0) throw UsageError("vocab size unknown: pass --vocab-size");

  std::optional<NgramModel> surrogate;
  if (o.scheme == "optimal") {
    if (o.surrogate.empty()) throw UsageError("optimal detection needs --surrogate");
    surrogate = load_model(o.surrogate);
    if (surrogate->vocab_size() != vocab)
      throw UsageError("surrogate vocab " + std::to_string(surrogate->vocab_size()) +
                       " != sequence vocab " + std::to_string(vocab));
  }

  JsonlFile out;
  out.header = {{"type", "reports"},     {"scheme", o.scheme}, {"lambda", o.lambda},
                {"vocab_size", vocab},   {"context_window", o.window},
                {"num_records", in.records.size()}};
  if (o.scheme == "optimal") out.header["eta"] = o.eta;
  if (o.scheme == "kgw") {
    out.header["rho"] = o.rho;
    out.header["delta"] = o.delta;
  }

  for (const auto& rec : in.records) {
    std::vector<std::uint32_t> text = rec.at("tokens").get<std::vector<std::uint32_t>>();
    nlohmann::json r;
    r["id"] = rec.value("id", out.records.size());
    if (o.scheme == "optimal") {
      SchemeParams p{o.eta, o.lambda, o.window, text.size()};
      DetectionReport rep = detect(*surrogate, text, key, p);
      std::size_t matches = 0;
      for (auto b : rep.per_token_match) matches += b;
      r["score"] = rep.score;
      r["match_count"] = matches;
      r["redundant_count"] = rep.redundant_count;
      r["decision"] = decision_str(rep.decision == Verdict::watermarked);
    } else if (o.scheme == "uniform") {
      DetectionReport rep = uniform_detect(text, key, vocab, o.window, o.lambda);
      std::size_t matches = 0;
      for (auto b : rep.per_token_match) matches += b;
      r["score"] = rep.score;
      r["match_count"] = matches;
      r["decision"] = decision_str(rep.decision == Verdict::watermarked);
    } else if (o.scheme == "kgw") {
      GreenRedParams p{o.rho, o.delta, o.window};
      BaselineReport rep = kgw_detect(text, key, p, vocab, o.lambda);
      r["score"] = rep.score;
      r["zscore"] = rep.zscore;
      r["decision"] = decision_str(rep.decision);
    } else if (o.scheme == "gumbelmax") {
      BaselineReport rep = gumbelmax_detect(text, key, vocab, o.window, o.lambda);
      r["score"] = rep.score;
      r["decision"] = decision_str(rep.decision);
    } else {
      throw UsageError("unknown scheme: " + o.scheme);
    }
    out.records.push_back(std::move(r));
  }
  write_jsonl(o.out, out);
  std::cout << "wrote " << out.records.size() << " reports -> " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- attack

struct AttackOpts {
  std::string in, out, report, source = "uniform", source_model;
  double mask_rate = 0.5;
  std::uint64_t seed = 0;
};

SubSource parse_source(const std::string& s) {
  if (s == "uniform") return SubSource::uniform;
  if (s == "unigram") return SubSource::unigram;
  if (s == "contextual") return SubSource::contextual;
  throw UsageError("unknown substitution source: " + s);
}

int cmd_attack(const AttackOpts& o) {
  JsonlFile in = read_jsonl(o.in);
  NgramModel source = load_model(o.source_model);
  AttackParams params{o.mask_rate, parse_source(o.source)};

  JsonlFile out;
  out.header = in.header;
  out.header["attack"] = {{"mask_rate", o.mask_rate},
                          {"source", o.source},
                          {"run_seed", o.seed}};
  std::vector<AttackResult> results;
  results.reserve(in.records.size());
  for (std::size_t i = 0; i < in.records.size(); ++i) {
    std::vector<std::uint32_t> text = in.records[i].at("tokens").get<std::vector<std::uint32_t>>();
    AttackResult res = substitution_attack(text, params, source, stream_u64(o.seed, i));
    nlohmann::json rec;
    rec["id"] = in.records[i].value("id", i);
    rec["tokens"] = res.text;
    rec["masked_count"] = res.masked_count;
    rec["replaced_count"] = res.replaced_count;
    rec["replaced_fraction"] = res.replaced_fraction;
    out.records.push_back(std::move(rec));
    results.push_back(std::move(res));
  }
  double mean = 0.0;
  for (const auto& r : results) mean += r.replaced_fraction;
  if (!results.empty()) mean /= static_cast<double>(results.size());
  out.header["attack"]["mean_replaced_fraction"] = mean;
  write_jsonl(o.out, out);
  if (!o.report.empty()) write_attack_csv(o.report, results);
  std::cout << "attacked " << results.size() << " sequences, mean replaced_fraction=" << mean
            << " -> " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::string model, surrogate, scheme = "optimal", key_hex, key_file, out_dir;
  std::string attack_source = "uniform", attack_source_model;
  std::size_t num_wm = 500, num_human = 500, seq_len = 200, window = 2, prompt_len = 0;
  double eta = 0.2, lambda = 0.5, rho = 0.5, delta = 2.0, attack_mask = 0.0;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalOpts& o) {
  NgramModel model = load_model(o.model);
  WatermarkKey key = load_key(o.key_hex, o.key_file);
  std::optional<NgramModel> surrogate;
  if (o.scheme == "optimal") {
    if (o.surrogate.empty()) throw UsageError("optimal detection needs --surrogate");
    surrogate = load_model(o.surrogate);
  }
  std::optional<NgramModel> attack_source;
  if (o.attack_mask > 0.0)
    attack_source = o.attack_source_model.empty() ? model : load_model(o.attack_source_model);

  const std::size_t m = model.vocab_size();
  Seed wm_lane = stream_u64(o.seed, 1), prompt_lane = stream_u64(o.seed, 2),
       human_lane = stream_u64(o.seed, 3), attack_lane = stream_u64(o.seed, 4);

  auto score_of = [&](std::span<const std::uint32_t> text) -> double {
    if (o.scheme == "optimal")
      return detect(*surrogate, text, key, {o.eta, o.lambda, o.window, text.size()}).score;
    if (o.scheme == "uniform")
      return uniform_detect(text, key, m, o.window, o.lambda).score;
    if (o.scheme == "kgw")
      return kgw_detect(text, key, {o.rho, o.delta, o.window}, m, o.lambda).score;
    if (o.scheme == "gumbelmax")
      return gumbelmax_detect(text, key, m, o.window, o.lambda).score;
    throw UsageError("unknown scheme: " + o.scheme);
  };

  std::vector<AttackResult> attack_results;
  std::vector<double> wm_scores, human_scores;
  for (std::size_t i = 0; i < o.num_wm; ++i) {
    std::vector<std::uint32_t> prompt;
    if (o.prompt_len > 0)
      prompt = model.sample_sequence({}, o.prompt_len, stream_u64(prompt_lane, i));
    std::uint64_t rng_seed = stream_u64(wm_lane, i);
    std::vector<std::uint32_t> text;
    if (o.scheme == "optimal")
      text = generate(model, prompt, key, {o.eta, o.lambda, o.window, o.seq_len}, rng_seed).tokens;
    else if (o.scheme == "uniform")
      text = uniform_generate(model, prompt, key, o.seq_len, o.window, rng_seed).tokens;
    else if (o.scheme == "kgw")
      text = kgw_generate(model, prompt, key, {o.rho, o.delta, o.window}, o.seq_len, rng_seed);
    else if (o.scheme == "gumbelmax")
      text = gumbelmax_generate(model, prompt, key, o.window, o.seq_len);
    else
      throw UsageError("unknown scheme: " + o.scheme);

    if (o.attack_mask > 0.0) {
      AttackResult res = substitution_attack(text, {o.attack_mask, parse_source(o.attack_source)},
                                             *attack_source, stream_u64(attack_lane, i));
      text = res.text;
      attack_results.push_back(std::move(res));
    }
    wm_scores.push_back(score_of(text));
  }
  for (std::size_t i = 0; i < o.num_human; ++i) {
    std::vector<std::uint32_t> prompt;
    if (o.prompt_len > 0)
      prompt = model.sample_sequence({}, o.prompt_len, stream_u64(prompt_lane, o.num_wm + i));
    std::vector<std::uint32_t> text =
        model.sample_sequence(prompt, o.seq_len, stream_u64(human_lane, i));
    human_scores.push_back(score_of(text));
  }

  RocCurve curve = roc(wm_scores, human_scores);
  std::filesystem::create_directories(o.out_dir);
  std::filesystem::path dir(o.out_dir);
  write_roc_csv(dir / "roc.csv", curve);
  if (!attack_results.empty()) write_attack_csv(dir / "attack_report.csv", attack_results);

  nlohmann::json summary = {{"scheme", o.scheme},
                            {"auc", curve.auc},
                            {"tpr_at_fpr_0.01", tpr_at_fpr(curve, 0.01)},
                            {"tpr_at_fpr_0.1", tpr_at_fpr(curve, 0.1)},
                            {"num_watermarked", o.num_wm},
                            {"num_human", o.num_human},
                            {"seq_len", o.seq_len},
                            {"run_seed", o.seed}};
  if (!attack_results.empty()) {
    double mean = 0.0;
    for (const auto& r : attack_results) mean += r.replaced_fraction;
    summary["mean_replaced_fraction"] = mean / static_cast<double>(attack_results.size());
  }
  std::ofstream sum(dir / "summary.json", std::ios::binary);
  sum << summary.dump(2) << "\n";
  std::cout << "auc=" << format_double(curve.auc) << " -> " << (dir / "roc.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- verify

struct VerifyCommon {
  std::uint64_t seed = 12345;
  std::size_t trials = 200;
};

int verify_theorem1(std::size_t vocab, std::size_t aux, std::size_t grid, std::uint64_t seed,
                    const std::string& out_csv) {
  if (aux == 0) aux = vocab + 1;
  int failures = 0;
  std::ostringstream csv;
  csv << "q,alpha,eps,closed_form,sweep_min,matching_detector_shape\n";
  for (std::size_t j = 0; j < grid; ++j) {
    Seed case_seed = stream_u64(seed, j);
    Categorical q = random_dist(case_seed, vocab);
    // concentrate alpha below 1/m so most cases exercise both closed-form branches
    double alpha = std::min(0.99, (0.05 + 1.2 * uniform_unit(case_seed, 100)) / static_cast<double>(vocab));
    double eps = 0.5 * uniform_unit(case_seed, 101);
    SweepResult sweep = universal_min_type2(q, alpha, eps, aux);
    double closed = min_type2_closed_form(q, alpha, eps);
    double delta = std::abs(sweep.min_type2 - closed);
    bool ok = delta <= 1e-9 && sweep.match_shape_minimizer;
    if (!ok) ++failures;
    for (std::size_t x = 0; x < q.size(); ++x)
      csv << (x ? ";" : "") << format_double(q[x]);
    csv << ',' << format_double(alpha) << ',' << format_double(eps) << ','
        << format_double(closed) << ',' << format_double(sweep.min_type2) << ','
        << (sweep.match_shape_minimizer ? 1 : 0) << "\n";
    if (!ok)
      std::cout << "[FAIL] case " << j << " alpha=" << alpha << " eps=" << eps
                << " sweep=" << sweep.min_type2 << " closed=" << closed << " delta=" << delta
                << " match_shape=" << sweep.match_shape_minimizer << "\n";
  }
  if (out_csv.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(out_csv, std::ios::binary);
    if (!f) throw UsageError("cannot write " + out_csv);
    f << csv.str();
  }
  std::cout << (failures == 0 ? "PASS" : "FAIL") << " theorem1: " << (grid - failures) << "/"
            << grid << " grid points\n";
  return failures == 0 ? 0 : 1;
}

int verify_scheme(std::size_t vocab_max, std::size_t trials, std::uint64_t seed) {
  if (vocab_max < 2) throw UsageError("--vocab-max must be at least 2");
  int failures = 0;
  double max_d2 = 0.0, max_excess1 = 0.0;
  for (std::size_t j = 0; j < trials; ++j) {
    Seed s = stream_u64(seed, j);
    std::size_t m = 2 + stream_u64(s, 0) % (vocab_max - 1);
    Categorical q = random_dist(stream_u64(s, 1), m);
    double alpha = std::min(0.99, (0.05 + 1.2 * uniform_unit(s, 2)) / static_cast<double>(m));
    double eps = 0.5 * uniform_unit(s, 3);
    std::vector<int> g(m + 1);
    for (std::size_t z = 0; z < m; ++z) g[z] = static_cast<int>(z);
    g[m] = -1;
    JointScheme scheme = build_optimal_scheme(q, alpha, eps, g);
    Detector det = detector_from_image(g, m);
    double t1 = exact_type1_worst(scheme, det);
    double t2 = exact_type2(scheme, det);
    double closed = min_type2_closed_form(q, alpha, eps);
    max_excess1 = std::max(max_excess1, t1 - alpha);
    max_d2 = std::max(max_d2, std::abs(t2 - closed));
    if (t1 > alpha + 1e-12 || std::abs(t2 - closed) > 1e-12) {
      ++failures;
      std::cout << "[FAIL] trial " << j << " m=" << m << " alpha=" << alpha << " eps=" << eps
                << " type1=" << t1 << " type2=" << t2 << " closed=" << closed << "\n";
    }
  }
  std::cout << (failures == 0 ? "PASS" : "FAIL") << " scheme: " << trials - failures << "/"
            << trials << " trials, max type1 excess=" << max_excess1
            << ", max |type2-closed|=" << max_d2 << "\n";
  return failures == 0 ? 0 : 1;
}

int verify_distortion(std::size_t trials, std::uint64_t seed) {
  double max_dev = 0.0;
  for (std::size_t j = 0; j < trials; ++j) {
    Seed s = stream_u64(seed, j);
    std::size_t m = 2 + stream_u64(s, 0) % 49;
    Categorical q = random_dist(stream_u64(s, 1), m);
    double eta = 0.01 + 0.99 * uniform_unit(s, 2);
    std::vector<std::uint8_t> key_bytes(16);
    for (std::size_t b = 0; b < 16; ++b)
      key_bytes[b] = static_cast<std::uint8_t>(stream_u64(s, 10 + b));
    AuxAlphabet aux = derive_aux_alphabet(WatermarkKey::from_bytes(key_bytes), m);
    Categorical pz = build_aux_dist(q, aux, eta);
    double excess = plus_part_excess(q, eta);
    std::vector<double> rec(m, 0.0);
    for (std::size_t x = 0; x < m; ++x) rec[x] = pz[aux.token_to_aux[x]];
    if (excess > 0.0) {
      Categorical res = residual_dist(q, eta);
      for (std::size_t x = 0; x < m; ++x) rec[x] += pz[aux.redundant_id()] * res[x];
    }
    for (std::size_t x = 0; x < m; ++x) max_dev = std::max(max_dev, std::abs(rec[x] - q[x]));
  }
  bool ok = max_dev < 1e-9;
  std::cout << (ok ? "PASS" : "FAIL") << " distortion: max marginal deviation=" << max_dev
            << " over " << trials << " trials\n";
  return ok ? 0 : 1;
}

int verify_type1(double eta, std::size_t T, std::size_t n, std::uint64_t seed,
                 const std::string& key_hex, const std::string& key_file,
                 std::vector<double> lambdas, const std::string& out_csv) {
  WatermarkKey key = (key_hex.empty() && key_file.empty()) ? builtin_verify_key()
                                                           : load_key(key_hex, key_file);
  if (lambdas.empty()) lambdas = {0.28, 0.30, 0.32, 0.34};

  // Key-independent skewed unigram source; any surrogate works under H0.
  NgramModel::CountTable counts;
  for (std::uint32_t x = 0; x < 50; ++x)
    counts[{}][x] = 1 + stream_u64(stream_u64(seed, 0xb0de), x) % 200;
  NgramModel human = NgramModel::from_counts(0, 50, 1.0, std::move(counts));

  SchemeParams params{eta, 0.5, 2, T};
  FprStudyResult study = fpr_study(human, key, params, n, lambdas, stream_u64(seed, 1));
  for (const FprRow& r : study.rows)
    std::cout << "lambda=" << r.lambda << " k=" << r.match_threshold
              << " theoretical=" << r.theoretical << " empirical=" << r.empirical
              << (r.empirical <= r.theoretical + 1e-15 ? "  [ok]" : "  [FAIL]") << "\n";
  if (!out_csv.empty()) write_fpr_study_csv(out_csv, study);
  std::cout << (study.empirical_within_bound ? "PASS" : "FAIL")
            << " type1: empirical within bound at all " << study.rows.size() << " thresholds, n="
            << n << "\n";
  return study.empirical_within_bound ? 0 : 1;
}

int verify_frobust(std::size_t vocab_max, std::size_t classes_max, std::size_t trials,
                   std::uint64_t seed) {
  if (vocab_max < 2) throw UsageError("--vocab-max must be at least 2");
  if (classes_max < 1) throw UsageError("--classes-max must be at least 1");
  int failures = 0;
  double max_d2 = 0.0, max_excess1 = 0.0, worst_mono = 0.0;
  for (std::size_t j = 0; j < trials; ++j) {
    Seed s = stream_u64(seed, j);
    std::size_t m = 2 + stream_u64(s, 0) % (vocab_max - 1);
    std::size_t K = 1 + stream_u64(s, 1) % std::min(classes_max, m);
    std::vector<std::uint32_t> assign(m);
    for (std::size_t x = 0; x < m; ++x)
      assign[x] = x < K ? static_cast<std::uint32_t>(x)
                        : static_cast<std::uint32_t>(stream_u64(s, 100 + x) % K);
    LatentMap f = LatentMap::from_assignment(assign);
    Categorical q = random_dist(stream_u64(s, 2), m);
    double alpha = std::min(0.99, (0.05 + 1.2 * uniform_unit(s, 3)) / static_cast<double>(K));
    double eps = 0.5 * uniform_unit(s, 4);

    std::vector<ClassTarget> targets;
    for (std::size_t k = 0; k < K; ++k) targets.push_back(ClassTarget::cls(static_cast<std::uint32_t>(k)));
    targets.push_back(ClassTarget::none());
    JointScheme scheme = build_frobust_scheme(q, alpha, eps, f, targets);
    Detector det = class_detector(f, targets);
    RobustErrors err = robust_errors(scheme, det, f);
    double target = robust_min_type2(q, alpha, eps, f);
    max_excess1 = std::max(max_excess1, err.type1_worst - alpha);
    max_d2 = std::max(max_d2, std::abs(err.type2 - target));

    bool ok = err.type1_worst <= alpha + 1e-12 && std::abs(err.type2 - target) <= 1e-12;
    if (K >= 2) {
      // merge the two smallest class ids and re-ask; a coarser map weakens the test
      std::vector<std::uint32_t> coarse = assign;
      for (auto& c : coarse)
        if (c == 1) c = 0;
      for (auto& c : coarse)
        if (c > 1) --c;
      double coarse_t2 = robust_min_type2(q, alpha, eps, LatentMap::from_assignment(coarse));
      worst_mono = std::min(worst_mono, coarse_t2 - target);
      if (coarse_t2 < target - 1e-12) ok = false;
    }
    if (!ok) {
      ++failures;
      std::cout << "[FAIL] trial " << j << " m=" << m << " K=" << K << " alpha=" << alpha
                << " eps=" << eps << " type1=" << err.type1_worst << " type2=" << err.type2
                << " target=" << target << "\n";
    }
  }
  std::cout << (failures == 0 ? "PASS" : "FAIL") << " frobust: " << trials - failures << "/"
            << trials << " trials, max type1 excess=" << max_excess1
            << ", max |type2-target|=" << max_d2 << ", worst coarsening slack=" << worst_mono
            << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"watermarking laboratory for token-sequence generators"};
  app.require_subcommand(1);
  int rc = 0;

  TrainOpts train;
  auto* t = app.add_subcommand("train-lm", "train an n-gram model from a token corpus");
  t->add_option("--corpus", train.corpus, "token corpus, one sequence per line")->required();
  t->add_option("--order", train.order, "context length");
  t->add_option("--smoothing", train.smoothing, "additive smoothing delta");
  t->add_option("--vocab-size", train.vocab, "0 = deduce from corpus");
  t->add_option("--out", train.out, "model JSON path")->required();
  t->callback([&] { rc = cmd_train_lm(train); });

  GenOpts gen;
  auto* g = app.add_subcommand("generate", "sample sequences under a scheme");
  g->add_option("--model", gen.model, "model JSON path")->required();
  g->add_option("--scheme", gen.scheme, "optimal|uniform|kgw|gumbelmax|human");
  g->add_option("--key-hex", gen.key_hex, "key as hex (16..64 bytes)");
  g->add_option("--key-file", gen.key_file, "key file (raw bytes)");
  g->add_option("--num", gen.num, "number of sequences");
  g->add_option("--seq-len", gen.seq_len, "tokens per sequence");
  g->add_option("--eta", gen.eta, "detectable-mass cap (optimal)");
  g->add_option("--lambda", gen.lambda, "detection threshold");
  g->add_option("--window", gen.window, "context window hashed into seeds");
  g->add_option("--rho", gen.rho, "green fraction (kgw)");
  g->add_option("--delta", gen.delta, "green log-boost (kgw)");
  g->add_option("--prompt", gen.prompt, "fixed prompt token ids");
  g->add_option("--prompt-len", gen.prompt_len, "draw a fresh prompt of this length per sequence");
  g->add_option("--seed", gen.seed, "run seed");
  g->add_option("--out", gen.out, "output JSONL")->required();
  g->callback([&] { rc = cmd_generate(gen); });

  DetectOpts det;
  auto* d = app.add_subcommand("detect", "score sequences against a key");
  d->add_option("--in", det.in, "sequences JSONL")->required();
  d->add_option("--out", det.out, "reports JSONL")->required();
  d->add_option("--scheme", det.scheme, "optimal|uniform|kgw|gumbelmax");
  d->add_option("--key-hex", det.key_hex, "key as hex");
  d->add_option("--key-file", det.key_file, "key file");
  d->add_option("--surrogate", det.surrogate, "surrogate model JSON (optimal)");
  d->add_option("--vocab-size", det.vocab, "override vocab size");
  d->add_option("--eta", det.eta, "detectable-mass cap (optimal)");
  d->add_option("--lambda", det.lambda, "decision threshold");
  d->add_option("--window", det.window, "context window");
  d->add_option("--rho", det.rho, "green fraction (kgw)");
  d->add_option("--delta", det.delta, "green log-boost (kgw)");
  d->callback([&] { rc = cmd_detect(det); });

  AttackOpts atk;
  auto* a = app.add_subcommand("attack", "random-substitution attack on sequences");
  a->add_option("--in", atk.in, "sequences JSONL")->required();
  a->add_option("--out", atk.out, "attacked sequences JSONL")->required();
  a->add_option("--report", atk.report, "attack report CSV");
  a->add_option("--mask-rate", atk.mask_rate, "fraction of positions redrawn");
  a->add_option("--source", atk.source, "uniform|unigram|contextual");
  a->add_option("--source-model", atk.source_model, "substitution source model")->required();
  a->add_option("--seed", atk.seed, "run seed");
  a->callback([&] { rc = cmd_attack(atk); });

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "generate, detect, and report ROC");
  e->add_option("--model", ev.model, "generation model JSON")->required();
  e->add_option("--surrogate", ev.surrogate, "surrogate model JSON (optimal)");
  e->add_option("--scheme", ev.scheme, "optimal|uniform|kgw|gumbelmax");
  e->add_option("--key-hex", ev.key_hex, "key as hex");
  e->add_option("--key-file", ev.key_file, "key file");
  e->add_option("--num-watermarked", ev.num_wm, "watermarked sequences");
  e->add_option("--num-human", ev.num_human, "human sequences");
  e->add_option("--seq-len", ev.seq_len, "tokens per sequence");
  e->add_option("--eta", ev.eta, "detectable-mass cap (optimal)");
  e->add_option("--lambda", ev.lambda, "decision threshold");
  e->add_option("--window", ev.window, "context window");
  e->add_option("--rho", ev.rho, "green fraction (kgw)");
  e->add_option("--delta", ev.delta, "green log-boost (kgw)");
  e->add_option("--prompt-len", ev.prompt_len, "per-sequence prompt length");
  e->add_option("--attack-mask", ev.attack_mask, "mask rate; 0 disables the attack");
  e->add_option("--attack-source", ev.attack_source, "uniform|unigram|contextual");
  e->add_option("--attack-source-model", ev.attack_source_model,
                "substitution source; defaults to --model");
  e->add_option("--seed", ev.seed, "run seed");
  e->add_option("--out-dir", ev.out_dir, "output directory")->required();
  e->callback([&] { rc = cmd_eval(ev); });

  auto* v = app.add_subcommand("verify", "exact small-instance checks");
  v->require_subcommand(1);

  std::size_t v_vocab = 2, v_aux = 0, v_grid = 20;
  std::uint64_t v_seed = 12345;
  std::string v_out;
  auto* v1 = v->add_subcommand("theorem1", "exhaustive detector sweep vs closed form");
  v1->add_option("--vocab", v_vocab, "outcome alphabet size");
  v1->add_option("--aux", v_aux, "auxiliary alphabet size; 0 = vocab+1");
  v1->add_option("--grid", v_grid, "number of (q, alpha, eps) cases");
  v1->add_option("--seed", v_seed, "case seed");
  v1->add_option("--out", v_out, "write the case report CSV here instead of stdout");
  v1->callback([&] { rc = verify_theorem1(v_vocab, v_aux, v_grid, v_seed, v_out); });

  VerifyCommon vs;
  std::size_t vs_vocab_max = 6;
  auto* v2 = v->add_subcommand("scheme", "constructed scheme attains the closed form");
  v2->add_option("--trials", vs.trials, "random instances");
  v2->add_option("--vocab-max", vs_vocab_max, "max outcome alphabet size");
  v2->add_option("--seed", vs.seed, "case seed");
  v2->callback([&] { rc = verify_scheme(vs_vocab_max, vs.trials, vs.seed); });

  VerifyCommon vd;
  auto* v3 = v->add_subcommand("distortion", "embedding preserves the token marginal");
  v3->add_option("--trials", vd.trials, "random instances");
  v3->add_option("--seed", vd.seed, "case seed");
  v3->callback([&] { rc = verify_distortion(vd.trials, vd.seed); });

  double vt_eta = 0.1;
  std::size_t vt_T = 50, vt_n = 8000;
  std::uint64_t vt_seed = 12345;
  std::string vt_key_hex, vt_key_file, vt_out;
  std::vector<double> vt_lambdas;
  auto* v4 = v->add_subcommand("type1", "empirical false alarms vs the analytic bound");
  v4->add_option("--eta", vt_eta, "detectable-mass cap");
  v4->add_option("--T", vt_T, "sequence length");
  v4->add_option("--n", vt_n, "number of key-independent sequences");
  v4->add_option("--lambda", vt_lambdas, "thresholds; default 0.28 0.30 0.32 0.34");
  v4->add_option("--key-hex", vt_key_hex, "key as hex; fixed test key if omitted");
  v4->add_option("--key-file", vt_key_file, "key file");
  v4->add_option("--out", vt_out, "write fpr_study.csv here");
  v4->add_option("--seed", vt_seed, "run seed");
  v4->callback([&] {
    rc = verify_type1(vt_eta, vt_T, vt_n, vt_seed, vt_key_hex, vt_key_file, vt_lambdas, vt_out);
  });

  VerifyCommon vf;
  std::size_t vf_vocab_max = 6, vf_classes_max = 3;
  vf.trials = 100;
  auto* v5 = v->add_subcommand("frobust", "substitution-robust scheme optimality");
  v5->add_option("--trials", vf.trials, "random instances");
  v5->add_option("--vocab-max", vf_vocab_max, "max outcome alphabet size");
  v5->add_option("--classes-max", vf_classes_max, "max latent classes");
  v5->add_option("--seed", vf.seed, "case seed");
  v5->callback([&] { rc = verify_frobust(vf_vocab_max, vf_classes_max, vf.trials, vf.seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
