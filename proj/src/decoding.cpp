#include "pseudoris/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pseudoris/numeric.hpp"

namespace pseudoris {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::greedy: return "greedy";
    case Strategy::beam: return "beam";
    case Strategy::topk_naive: return "topk_naive";
    case Strategy::topp_naive: return "topp_naive";
    case Strategy::topk_distinctive: return "topk";
    case Strategy::topp_distinctive: return "topp";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "greedy") return Strategy::greedy;
  if (s == "beam") return Strategy::beam;
  if (s == "topk_naive") return Strategy::topk_naive;
  if (s == "topp_naive") return Strategy::topp_naive;
  if (s == "topk" || s == "topk_distinctive") return Strategy::topk_distinctive;
  if (s == "topp" || s == "topp_distinctive") return Strategy::topp_distinctive;
  throw UsageError("unknown decoding strategy '" + s + "'");
}

std::string to_string(CalibrationMode m) {
  return m == CalibrationMode::average ? "average" : "weighted";
}

CalibrationMode calibration_mode_from_string(const std::string& s) {
  if (s == "average") return CalibrationMode::average;
  if (s == "weighted") return CalibrationMode::weighted;
  throw UsageError("unknown calibration mode '" + s + "'");
}

void DecodingConfig::validate() const {
  if (temperature <= 0.0) throw ConfigError("decoding: temperature must be > 0");
  if (max_len < 1) throw ConfigError("decoding: max_len must be >= 1");
  switch (strategy) {
    case Strategy::greedy:
      break;
    case Strategy::beam:
      if (beam_width < 1) throw ConfigError("decoding: beam_width must be >= 1");
      break;
    case Strategy::topk_naive:
    case Strategy::topk_distinctive:
      if (k < 1) throw ConfigError("decoding: k must be >= 1");
      break;
    case Strategy::topp_naive:
    case Strategy::topp_distinctive:
      if (!(p > 0.0 && p <= 1.0)) {
        throw ConfigError("decoding: p must be in (0, 1]");
      }
      break;
  }
}

std::vector<DecodingConfig> default_decoding_grid() {
  std::vector<DecodingConfig> grid;
  DecodingConfig beam;
  beam.strategy = Strategy::beam;
  beam.beam_width = 5;
  grid.push_back(beam);
  for (const int k : {5, 7, 9, 11, 13}) {
    DecodingConfig c;
    c.strategy = Strategy::topk_distinctive;
    c.k = k;
    c.temperature = kDefaultGridTemperature;
    grid.push_back(c);
  }
  for (const double p : {0.4, 0.5, 0.6, 0.7, 0.8}) {
    DecodingConfig c;
    c.strategy = Strategy::topp_distinctive;
    c.p = p;
    c.temperature = kDefaultGridTemperature;
    grid.push_back(c);
  }
  return grid;
}

std::vector<DecodingConfig> naive_decoding_grid() {
  auto grid = default_decoding_grid();
  for (auto& c : grid) {
    if (c.strategy == Strategy::topk_distinctive) c.strategy = Strategy::topk_naive;
    if (c.strategy == Strategy::topp_distinctive) c.strategy = Strategy::topp_naive;
  }
  return grid;
}

double similarity(const VisualEmbedding& a, const VisualEmbedding& b) {
  return clamped_cosine(a.vec, b.vec);
}

CalibrationContext build_calibration_context(const CaptionerBackend& captioner,
                                             Patch target,
                                             std::vector<Patch> others) {
  CalibrationContext ctx;
  const VisualEmbedding te = captioner.embed(target);
  ctx.sims.resize(static_cast<Eigen::Index>(others.size()));
  for (std::size_t j = 0; j < others.size(); ++j) {
    ctx.sims[static_cast<Eigen::Index>(j)] =
        similarity(te, captioner.embed(others[j]));
  }
  ctx.target = std::move(target);
  ctx.others = std::move(others);
  return ctx;
}

WordDistribution calibrate(const WordDistribution& target,
                           const std::vector<WordDistribution>& others,
                           const Eigen::VectorXd& sims, double temperature,
                           CalibrationMode mode) {
  if (static_cast<Eigen::Index>(others.size()) != sims.size()) {
    throw ShapeError("calibrate: |others| != |sims|");
  }
  if (temperature <= 0.0) throw UsageError("calibrate: temperature must be > 0");

  Eigen::VectorXd pre = target.probs;
  if (!others.empty()) {
    const double sim_sum = sims.sum();
    const bool weighted = mode == CalibrationMode::weighted && sim_sum > 0.0;
    const double n = static_cast<double>(others.size());
    for (std::size_t j = 0; j < others.size(); ++j) {
      const auto idx = static_cast<Eigen::Index>(j);
      if (others[j].probs.size() != pre.size()) {
        throw ShapeError("calibrate: distribution sizes differ");
      }
      const double w = weighted ? sims[idx] / sim_sum : sims[idx] / n;
      pre -= w * others[j].probs;
    }
  }
  WordDistribution out;
  out.probs = softmax(pre, temperature);
  return out;
}

WordDistribution restrict_vocab(const WordDistribution& dist, RestrictMode mode,
                                double k_or_p) {
  const int n = dist.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dist.probs[a] > dist.probs[b];  // equal probs keep index order
  });

  Eigen::VectorXd kept = Eigen::VectorXd::Zero(n);
  if (mode == RestrictMode::topk) {
    const int k = static_cast<int>(k_or_p);
    if (k < 1) throw UsageError("restrict_vocab: k must be >= 1");
    for (int i = 0; i < std::min(k, n); ++i) {
      kept[order[i]] = dist.probs[order[i]];
    }
  } else {
    const double p = k_or_p;
    if (!(p > 0.0 && p <= 1.0)) {
      throw UsageError("restrict_vocab: p must be in (0, 1]");
    }
    double cum = 0.0;
    for (int i = 0; i < n; ++i) {
      kept[order[i]] = dist.probs[order[i]];
      cum += dist.probs[order[i]];
      if (cum >= p) break;
    }
  }
  const double total = kept.sum();
  WordDistribution out;
  out.probs = total > 0.0 ? Eigen::VectorXd(kept / total) : dist.probs;
  return out;
}

TokenId sample_next(const WordDistribution& dist, CounterRng& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  TokenId last_nonzero = -1;
  for (int i = 0; i < dist.size(); ++i) {
    if (dist.probs[i] <= 0.0) continue;
    cum += dist.probs[i];
    last_nonzero = i;
    if (u < cum) return i;
  }
  if (last_nonzero < 0) throw UsageError("sample_next: empty distribution");
  return last_nonzero;  // u landed in the rounding gap past the total mass
}

namespace {

WordDistribution checked_next_dist(const CaptionerBackend& captioner,
                                   const Patch& patch,
                                   const TokenSequence& prefix, int step) {
  WordDistribution d;
  try {
    d = captioner.next_word_dist(patch, prefix);
  } catch (const Error& e) {
    throw StateError("captioner failed at step " + std::to_string(step) + ": " +
                     e.what());
  }
  if (!d.valid()) {
    throw ContractError("captioner returned an invalid distribution at step " +
                        std::to_string(step));
  }
  return d;
}

// The calibration softmax assigns positive mass to every token, including
// ones the captioner itself rules out. Sampling must not invent words, so
// tokens with zero target probability (and bos always) are masked back out.
void mask_unsupported(WordDistribution& dist, const WordDistribution& support,
                      TokenId bos_id) {
  for (int i = 0; i < dist.size(); ++i) {
    if (support.probs[i] <= 0.0) dist.probs[i] = 0.0;
  }
  if (bos_id >= 0 && bos_id < dist.size()) dist.probs[bos_id] = 0.0;
  const double total = dist.probs.sum();
  if (total <= 0.0) {
    throw ContractError("calibrated distribution has no supported tokens");
  }
  dist.probs /= total;
}

}  // namespace

TokenSequence generate(const CaptionerBackend& captioner,
                       const CalibrationContext& ctx,
                       const DecodingConfig& config, CounterRng& rng) {
  config.validate();
  const bool distinctive = config.distinctive();
  const bool topk = config.strategy == Strategy::topk_naive ||
                    config.strategy == Strategy::topk_distinctive;
  if (!topk && config.strategy != Strategy::topp_naive &&
      config.strategy != Strategy::topp_distinctive) {
    throw UsageError("generate: strategy is not a sampling strategy");
  }
  const Vocabulary& vocab = captioner.vocabulary();

  TokenSequence seq;
  for (int step = 0; step < config.max_len; ++step) {
    const WordDistribution raw = checked_next_dist(captioner, ctx.target, seq, step);
    WordDistribution dist;
    if (distinctive) {
      std::vector<WordDistribution> other_dists;
      other_dists.reserve(ctx.others.size());
      for (const Patch& other : ctx.others) {
        other_dists.push_back(checked_next_dist(captioner, other, seq, step));
      }
      dist = calibrate(raw, other_dists, ctx.sims, config.temperature,
                       config.calibration_mode);
      mask_unsupported(dist, raw, vocab.bos_id);
    } else {
      dist = raw;
      if (vocab.bos_id < dist.size() && dist.probs[vocab.bos_id] > 0.0) {
        dist.probs[vocab.bos_id] = 0.0;
        dist.probs /= dist.probs.sum();
      }
    }
    dist = restrict_vocab(dist, topk ? RestrictMode::topk : RestrictMode::topp,
                          topk ? static_cast<double>(config.k) : config.p);
    const TokenId next = sample_next(dist, rng);
    seq.ids.push_back(next);
    if (next == vocab.eos_id) {
      seq.complete = true;
      break;
    }
  }
  return seq;
}

TokenSequence greedy_decode(const CaptionerBackend& captioner,
                            const Patch& target, int max_len) {
  const Vocabulary& vocab = captioner.vocabulary();
  TokenSequence seq;
  for (int step = 0; step < max_len; ++step) {
    const WordDistribution dist = checked_next_dist(captioner, target, seq, step);
    TokenId best = -1;
    double best_p = -1.0;
    for (int i = 0; i < dist.size(); ++i) {
      if (i == vocab.bos_id) continue;
      if (dist.probs[i] > best_p) {
        best_p = dist.probs[i];
        best = i;
      }
    }
    seq.ids.push_back(best);
    if (best == vocab.eos_id) {
      seq.complete = true;
      break;
    }
  }
  return seq;
}

namespace {

struct Beam {
  TokenSequence seq;
  double logprob = 0.0;
};

// Ordering used both to prune and to pick the final beam: higher logprob
// first, then lexicographically smaller token ids.
bool beam_before(const Beam& a, const Beam& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.seq.ids < b.seq.ids;
}

}  // namespace

TokenSequence beam_search(const CaptionerBackend& captioner, const Patch& target,
                          int width, int max_len) {
  if (width < 1) throw UsageError("beam_search: width must be >= 1");
  const Vocabulary& vocab = captioner.vocabulary();

  std::vector<Beam> active{Beam{}};
  std::vector<Beam> finished;
  for (int step = 0; step < max_len && !active.empty(); ++step) {
    std::vector<Beam> expanded;
    for (const Beam& beam : active) {
      const WordDistribution dist =
          checked_next_dist(captioner, target, beam.seq, step);
      for (int i = 0; i < dist.size(); ++i) {
        if (i == vocab.bos_id || dist.probs[i] <= 0.0) continue;
        Beam next = beam;
        next.seq.ids.push_back(i);
        next.logprob += std::log(dist.probs[i]);
        if (i == vocab.eos_id) {
          next.seq.complete = true;
          finished.push_back(std::move(next));
        } else {
          expanded.push_back(std::move(next));
        }
      }
    }
    std::sort(expanded.begin(), expanded.end(), beam_before);
    if (static_cast<int>(expanded.size()) > width) expanded.resize(width);
    active = std::move(expanded);
  }

  std::sort(finished.begin(), finished.end(), beam_before);
  if (!finished.empty()) return finished.front().seq;
  std::sort(active.begin(), active.end(), beam_before);
  if (!active.empty()) return active.front().seq;
  return {};
}

TokenSequence decode(const CaptionerBackend& captioner,
                     const CalibrationContext& ctx, const DecodingConfig& config,
                     CounterRng& rng) {
  config.validate();
  switch (config.strategy) {
    case Strategy::greedy:
      return greedy_decode(captioner, ctx.target, config.max_len);
    case Strategy::beam:
      return beam_search(captioner, ctx.target, config.beam_width, config.max_len);
    default:
      return generate(captioner, ctx, config, rng);
  }
}

}  // namespace pseudoris
