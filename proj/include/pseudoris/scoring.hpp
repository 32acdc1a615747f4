#pragma once

#include <limits>
#include <string>
#include <vector>

#include "pseudoris/backends.hpp"
#include "pseudoris/decoding.hpp"

namespace pseudoris {

// One generated caption for one mask, with its raw image-text scores and the
// three derived metrics. Scores are filled in by the scoring pass.
struct CaptionCandidate {
  int mask_index = -1;
  std::string text;
  TokenSequence tokens;
  CropSpec crop_spec;
  int decoding_config_index = -1;

  double theta_target = 0.0;
  std::vector<double> theta_others;
  double uos = 0.0;
  double cos = 0.0;
  double dos = 0.0;
  bool scored = false;
};

enum class FilterMetric { uniqueness, correctness, distinctiveness };

std::string to_string(FilterMetric m);
FilterMetric filter_metric_from_string(const std::string& s);

// Keep a candidate when the chosen metric is at least tau.
struct FilterConfig {
  FilterMetric metric = FilterMetric::distinctiveness;
  double tau = 1.3;

  void validate() const;
};

// Cuts a caption down to its leading noun phrase: the longest whitespace-token
// prefix before the first relational stop word (preposition, relative marker,
// or a small set of verb forms). Lowercased and trimmed; text without a stop
// word comes back whole.
std::string extract_noun_phrase(const std::string& text);

// Uniqueness: target score over the best distractor score. With no
// distractors the caption is trivially unique and the +inf sentinel is
// returned.
double uos(double theta_target, const std::vector<double>& theta_others);

// Correctness: scorer applied to the background-zeroed patch and the
// caption's noun phrase, floored at kScoreFloor.
double cos_score(const ScorerBackend& scorer, const Patch& masked_patch,
                 const std::string& caption);

// Distinctiveness: ratio of cos*theta products, target over best distractor;
// +inf sentinel with no distractors.
double dos(double cos_target, double theta_target,
           const std::vector<double>& cos_others,
           const std::vector<double>& theta_others);

double metric_value(const CaptionCandidate& candidate, FilterMetric metric);

// Keeps candidates whose metric is >= tau, preserving input order. The +inf
// sentinel always survives.
std::vector<CaptionCandidate> filter_candidates(
    const std::vector<CaptionCandidate>& candidates, const FilterConfig& config);

inline constexpr double kUniqueSentinel = std::numeric_limits<double>::infinity();

}  // namespace pseudoris
