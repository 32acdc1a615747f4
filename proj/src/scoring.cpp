#include "pseudoris/scoring.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

namespace pseudoris {

std::string to_string(FilterMetric m) {
  switch (m) {
    case FilterMetric::uniqueness: return "uniqueness";
    case FilterMetric::correctness: return "correctness";
    case FilterMetric::distinctiveness: return "distinctiveness";
  }
  return "unknown";
}

FilterMetric filter_metric_from_string(const std::string& s) {
  if (s == "uniqueness") return FilterMetric::uniqueness;
  if (s == "correctness") return FilterMetric::correctness;
  if (s == "distinctiveness") return FilterMetric::distinctiveness;
  throw UsageError("unknown filter metric '" + s + "'");
}

void FilterConfig::validate() const {
  if (!(tau >= 0.0) || !std::isfinite(tau)) {
    throw ConfigError("filter: tau must be a finite value >= 0");
  }
}

namespace {

// Relational words that end the subject noun phrase.
const std::array<const char*, 20> kStopWords = {
    // prepositions
    "with", "in", "on", "at", "near", "behind", "under", "over", "by", "of",
    // relative markers
    "that", "which", "who",
    // verb forms that start a modifier clause
    "wearing", "holding", "sitting", "standing", "riding", "eating", "looking"};

bool is_stop_word(const std::string& tok) {
  return std::find(kStopWords.begin(), kStopWords.end(), tok) != kStopWords.end();
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string extract_noun_phrase(const std::string& text) {
  std::istringstream in(lowercase(text));
  std::string tok;
  std::string phrase;
  bool any = false;
  while (in >> tok) {
    any = true;
    if (is_stop_word(tok)) break;
    if (!phrase.empty()) phrase += ' ';
    phrase += tok;
  }
  if (!any) throw UsageError("extract_noun_phrase: empty text");
  return phrase;
}

double uos(double theta_target, const std::vector<double>& theta_others) {
  if (theta_others.empty()) return kUniqueSentinel;
  const double best = *std::max_element(theta_others.begin(), theta_others.end());
  return theta_target / best;
}

double cos_score(const ScorerBackend& scorer, const Patch& masked_patch,
                 const std::string& caption) {
  if (!masked_patch.spec.masked) {
    throw ContractError("cos_score: patch must use a masked crop spec");
  }
  const double s = scorer.score(masked_patch, extract_noun_phrase(caption));
  return std::max(s, kScoreFloor);
}

double dos(double cos_target, double theta_target,
           const std::vector<double>& cos_others,
           const std::vector<double>& theta_others) {
  if (cos_others.size() != theta_others.size()) {
    throw ShapeError("dos: cos/theta distractor lists differ in length");
  }
  if (cos_others.empty()) return kUniqueSentinel;
  double best = 0.0;
  for (std::size_t j = 0; j < cos_others.size(); ++j) {
    best = std::max(best, cos_others[j] * theta_others[j]);
  }
  return (cos_target * theta_target) / best;
}

double metric_value(const CaptionCandidate& candidate, FilterMetric metric) {
  if (!candidate.scored) {
    throw StateError("filter: candidate has no computed scores");
  }
  switch (metric) {
    case FilterMetric::uniqueness: return candidate.uos;
    case FilterMetric::correctness: return candidate.cos;
    case FilterMetric::distinctiveness: return candidate.dos;
  }
  return 0.0;
}

std::vector<CaptionCandidate> filter_candidates(
    const std::vector<CaptionCandidate>& candidates, const FilterConfig& config) {
  config.validate();
  std::vector<CaptionCandidate> kept;
  for (const auto& c : candidates) {
    if (metric_value(c, config.metric) >= config.tau) kept.push_back(c);
  }
  return kept;
}

}  // namespace pseudoris
