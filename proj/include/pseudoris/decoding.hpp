#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pseudoris/backends.hpp"
#include "pseudoris/rng.hpp"
#include "pseudoris/types.hpp"

namespace pseudoris {

enum class Strategy {
  greedy,
  beam,
  topk_naive,
  topp_naive,
  topk_distinctive,
  topp_distinctive,
};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

enum class CalibrationMode { average, weighted };

std::string to_string(CalibrationMode m);
CalibrationMode calibration_mode_from_string(const std::string& s);

// One decoding recipe. Only the parameters relevant to `strategy` are read:
// k for top-k variants, p for top-p variants, beam_width for beam.
struct DecodingConfig {
  Strategy strategy = Strategy::greedy;
  int k = 0;
  double p = 0.0;
  int beam_width = 1;
  double temperature = 1.0;
  int max_len = 32;
  CalibrationMode calibration_mode = CalibrationMode::average;

  void validate() const;
  bool distinctive() const {
    return strategy == Strategy::topk_distinctive ||
           strategy == Strategy::topp_distinctive;
  }
};

// The stock candidate grid: beam(5), then distinctive top-k over
// k in {5,7,9,11,13}, then distinctive top-p over p in {0.4..0.8}.
// The calibration softmax acts on probability differences, whose scale is a
// couple of orders below logits, so the grid pins a correspondingly small
// temperature; a bare DecodingConfig still defaults to 1.0.
inline constexpr double kDefaultGridTemperature = 0.02;
std::vector<DecodingConfig> default_decoding_grid();

// Same shape as the default grid but with plain (uncalibrated) sampling.
std::vector<DecodingConfig> naive_decoding_grid();

// Distractor context for calibrated decoding: the target patch, the sibling
// patches from the same image (same crop spec), and their embedding
// similarities to the target, each clamped into [0, 1].
struct CalibrationContext {
  Patch target;
  std::vector<Patch> others;
  Eigen::VectorXd sims;
};

// Builds a CalibrationContext by embedding all patches with `captioner`.
CalibrationContext build_calibration_context(const CaptionerBackend& captioner,
                                             Patch target,
                                             std::vector<Patch> others);

// Cosine similarity of two unit-norm embeddings, clamped into [0, 1].
double similarity(const VisualEmbedding& a, const VisualEmbedding& b);

// Rewrites the target's next-word distribution against the distractors':
//   average:  softmax_T(P_t - (1/n) * sum_j s_j * P_j)
//   weighted: softmax_T(P_t - sum_j w_j * P_j),  w_j = s_j / sum(s)
// With no distractors this reduces to softmax_T(P_t). Weighted mode with all
// similarities zero falls back to average mode.
WordDistribution calibrate(const WordDistribution& target,
                           const std::vector<WordDistribution>& others,
                           const Eigen::VectorXd& sims, double temperature,
                           CalibrationMode mode);

enum class RestrictMode { topk, topp };

// Zeroes probabilities outside the retained set and renormalizes. Top-k keeps
// the k most probable tokens; top-p keeps the smallest probability-sorted
// prefix with cumulative mass >= p. Sorting ties go to the lower token index.
WordDistribution restrict_vocab(const WordDistribution& dist, RestrictMode mode,
                                double k_or_p);

// Inverse-CDF draw over token-index order.
TokenId sample_next(const WordDistribution& dist, CounterRng& rng);

// Token-by-token sampling decode (top-k/top-p, naive or distinctive).
// Distinctive strategies condition every distractor patch on the target's
// prefix, calibrate, then restrict and sample. Tokens the captioner itself
// assigns zero probability stay unsampleable even though the calibration
// softmax lifts them off zero; bos is never sampled.
TokenSequence generate(const CaptionerBackend& captioner,
                       const CalibrationContext& ctx,
                       const DecodingConfig& config, CounterRng& rng);

// Uncalibrated argmax decode.
TokenSequence greedy_decode(const CaptionerBackend& captioner,
                            const Patch& target, int max_len);

// Standard beam search over cumulative log-probability, uncalibrated.
// Returns the best finished beam, or the best unfinished one if nothing
// reached eos within max_len. Ties break toward lower token indices.
TokenSequence beam_search(const CaptionerBackend& captioner, const Patch& target,
                          int width, int max_len);

// Strategy dispatch used by the pipeline.
TokenSequence decode(const CaptionerBackend& captioner,
                     const CalibrationContext& ctx, const DecodingConfig& config,
                     CounterRng& rng);

}  // namespace pseudoris
