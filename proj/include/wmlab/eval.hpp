#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmlab/lm.hpp"
#include "wmlab/prg.hpp"
#include "wmlab/token_wm.hpp"

namespace wmlab {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // thresholds descending, fpr nondecreasing
  double auc = 0.0;              // trapezoid area; equals tie-aware pairwise wins
};

/// Threshold sweep over the union of observed scores (classify as watermarked
/// when score >= threshold).
RocCurve roc(std::span<const double> watermarked, std::span<const double> human);

/// Conservative read-off: among curve points with fpr <= target, take the
/// highest attained fpr level, and at that level the largest threshold.
double tpr_at_fpr(const RocCurve& curve, double fpr_target);

enum class SubSource { uniform, unigram, contextual };

struct AttackParams {
  double mask_rate = 0.5;
  SubSource source = SubSource::uniform;
};

struct AttackResult {
  std::vector<std::uint32_t> text;
  std::size_t masked_count = 0;
  std::size_t replaced_count = 0;   // positions where the token actually changed
  double replaced_fraction = 0.0;   // replaced_count / length
};

/// Independently masks each position with probability mask_rate and redraws it
/// from the source: uniform over the vocab, the model's unigram table, or the
/// model's prediction at the (already attacked) prefix.
AttackResult substitution_attack(std::span<const std::uint32_t> text, const AttackParams& params,
                                 const NgramModel& source_model, std::uint64_t rng_seed);

struct FprRow {
  double lambda = 0.0;
  std::size_t match_threshold = 0;  // ceil(T * lambda)
  double theoretical = 0.0;
  double empirical = 0.0;
  std::size_t num_sequences = 0;
};

struct FprStudyResult {
  std::vector<FprRow> rows;
  bool empirical_within_bound = true;
};

/// False-alarm study on key-independent text: sequences sampled from
/// human_source, detected with the given key and human_source as surrogate,
/// empirical rates compared against the closed-form bound per lambda.
FprStudyResult fpr_study(const NgramModel& human_source, const WatermarkKey& key,
                         const SchemeParams& params, std::size_t num_sequences,
                         std::span<const double> lambda_grid, std::uint64_t rng_seed);

/// Lower-tail concentration bound for a sum of locally dependent indicators
/// with mean delta, neighborhood weight psi, and pair weight phi, evaluated at
/// a * delta: exp(-min((1-a)^2 d^2 / (8 phi + 2 d), (1-a) d / (6 psi))).
double type2_bound(double delta, double psi, double phi, double a);

struct JansonParams {
  double delta = 0.0;  // sum of per-position match rates
  double psi = 0.0;    // max over positions of the neighborhood rate sum
  double phi = 0.0;    // sum of pair rates over dependent unordered pairs
};

/// Plug-in estimates from per-trace match indicators; positions within
/// context_window of each other are treated as dependent.
JansonParams janson_from_matches(const std::vector<std::vector<std::uint8_t>>& match_rows,
                                 std::size_t context_window);

}  // namespace wmlab
