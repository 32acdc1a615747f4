#include <doctest.h>

#include <cmath>

#include "pseudoris/decoding.hpp"
#include "test_support.hpp"

using namespace pseudoris;
using testsupport::TableCaptioner;
using testsupport::dummy_patch;
using testsupport::random_distribution;

namespace {

VisualEmbedding unit(std::initializer_list<double> values) {
  VisualEmbedding e;
  e.vec = Eigen::VectorXd(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double v : values) e.vec[i++] = v;
  return e;
}

WordDistribution dist3(double a, double b, double c) {
  WordDistribution d;
  d.probs = Eigen::Vector3d(a, b, c);
  return d;
}

}  // namespace

TEST_CASE("similarity of unit embeddings") {
  const auto ex = unit({1.0, 0.0});
  const auto ey = unit({0.0, 1.0});
  CHECK(similarity(ex, ex) == doctest::Approx(1.0));
  CHECK(similarity(ex, ey) == doctest::Approx(0.0));
  CHECK(similarity(ex, unit({0.6, 0.8})) == doctest::Approx(0.6));
  CHECK(similarity(ex, unit({-1.0, 0.0})) == 0.0);  // negative cosine clamps
  CHECK_THROWS_AS(similarity(ex, unit({1.0, 0.0, 0.0})), ShapeError);
}

TEST_CASE("calibrate matches hand-evaluated arithmetic") {
  const auto target = dist3(0.7, 0.2, 0.1);
  const auto other = dist3(0.6, 0.3, 0.1);
  Eigen::VectorXd sims(1);
  sims << 0.5;

  const auto out =
      calibrate(target, {other}, sims, 1.0, CalibrationMode::average);

  // pre-softmax: (0.7-0.5*0.6, 0.2-0.5*0.3, 0.1-0.5*0.1) = (0.40, 0.05, 0.05)
  const double e0 = std::exp(0.40), e1 = std::exp(0.05), e2 = std::exp(0.05);
  const double z = e0 + e1 + e2;
  CHECK(out.probs[0] == doctest::Approx(e0 / z).epsilon(1e-12));
  CHECK(out.probs[1] == doctest::Approx(e1 / z).epsilon(1e-12));
  CHECK(out.probs[2] == doctest::Approx(e2 / z).epsilon(1e-12));
  CHECK(out.probs[0] == doctest::Approx(0.415).epsilon(1e-3));
  CHECK(out.probs[1] == doctest::Approx(0.2925).epsilon(1e-3));
  CHECK(out.valid());
}

TEST_CASE("calibrate with no distractors preserves the argmax") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    CounterRng rng(mix_key(7, trial));
    const auto d = random_distribution(rng, 2 + static_cast<int>(rng.next_below(30)));
    Eigen::Index want;
    d.probs.maxCoeff(&want);
    for (const double t : {0.5, 1.0, 2.0}) {
      const auto out = calibrate(d, {}, Eigen::VectorXd(0), t,
                                 CalibrationMode::average);
      Eigen::Index got;
      out.probs.maxCoeff(&got);
      CHECK(got == want);
    }
  }
}

TEST_CASE("identical distractor with s=1 flattens to uniform") {
  CounterRng rng(99);
  const auto d = random_distribution(rng, 12);
  Eigen::VectorXd sims(1);
  sims << 1.0;
  const auto out = calibrate(d, {d}, sims, 1.0, CalibrationMode::average);
  CHECK(out.probs.maxCoeff() - out.probs.minCoeff() < 1e-9);
}

TEST_CASE("raising a distractor probability never raises the output") {
  for (std::uint64_t trial = 0; trial < 300; ++trial) {
    CounterRng rng(mix_key(21, trial));
    const int n = 3 + static_cast<int>(rng.next_below(20));
    const auto target = random_distribution(rng, n);
    std::vector<WordDistribution> others{random_distribution(rng, n),
                                         random_distribution(rng, n)};
    Eigen::VectorXd sims(2);
    sims << 0.2 + 0.8 * rng.next_double(), 0.2 + 0.8 * rng.next_double();
    const double t = 0.5 + rng.next_double();

    const int w = static_cast<int>(rng.next_below(n));
    const auto before =
        calibrate(target, others, sims, t, CalibrationMode::average);

    // mix distractor 0 toward a point mass on w; this raises P_0(w)
    const double lambda = 0.1 + 0.8 * rng.next_double();
    Eigen::VectorXd onehot = Eigen::VectorXd::Zero(n);
    onehot[w] = 1.0;
    others[0].probs = (1.0 - lambda) * others[0].probs + lambda * onehot;

    const auto after =
        calibrate(target, others, sims, t, CalibrationMode::average);
    CHECK(after.probs[w] <= before.probs[w]);
  }
}

TEST_CASE("average and weighted modes coincide when all sims are 1") {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    CounterRng rng(mix_key(33, trial));
    const int n = 2 + static_cast<int>(rng.next_below(20));
    const auto target = random_distribution(rng, n);
    std::vector<WordDistribution> others;
    const int m = 1 + static_cast<int>(rng.next_below(4));
    for (int j = 0; j < m; ++j) others.push_back(random_distribution(rng, n));
    const Eigen::VectorXd sims = Eigen::VectorXd::Ones(m);

    const auto avg = calibrate(target, others, sims, 1.0, CalibrationMode::average);
    const auto wgt = calibrate(target, others, sims, 1.0, CalibrationMode::weighted);
    CHECK((avg.probs - wgt.probs).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("weighted mode with all-zero sims falls back to average") {
  CounterRng rng(5);
  const auto target = random_distribution(rng, 8);
  const std::vector<WordDistribution> others{random_distribution(rng, 8)};
  const Eigen::VectorXd sims = Eigen::VectorXd::Zero(1);
  const auto avg = calibrate(target, others, sims, 1.0, CalibrationMode::average);
  const auto wgt = calibrate(target, others, sims, 1.0, CalibrationMode::weighted);
  CHECK(avg.probs == wgt.probs);
}

TEST_CASE("calibrate validates shapes and temperature") {
  const auto d = dist3(0.5, 0.3, 0.2);
  Eigen::VectorXd sims(1);
  sims << 0.5;
  CHECK_THROWS_AS(calibrate(d, {}, sims, 1.0, CalibrationMode::average),
                  ShapeError);
  WordDistribution wrong;
  wrong.probs = Eigen::VectorXd::Constant(4, 0.25);
  CHECK_THROWS_AS(calibrate(d, {wrong}, sims, 1.0, CalibrationMode::average),
                  ShapeError);
  CHECK_THROWS_AS(calibrate(d, {d}, sims, 0.0, CalibrationMode::average),
                  UsageError);
}

TEST_CASE("calibrate output is always a valid distribution") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    CounterRng rng(mix_key(55, trial));
    const int n = 2 + static_cast<int>(rng.next_below(40));
    const auto target = random_distribution(rng, n);
    const int m = static_cast<int>(rng.next_below(4));
    std::vector<WordDistribution> others;
    Eigen::VectorXd sims(m);
    for (int j = 0; j < m; ++j) {
      others.push_back(random_distribution(rng, n));
      sims[j] = rng.next_double();
    }
    const auto mode = trial % 2 == 0 ? CalibrationMode::average
                                     : CalibrationMode::weighted;
    const auto out = calibrate(target, others, sims, 0.25 + rng.next_double(), mode);
    CHECK(out.valid());
  }
}

TEST_CASE("restrict_vocab on hand cases") {
  SUBCASE("k equal to vocab size keeps the distribution") {
    const auto d = dist3(0.5, 0.3, 0.2);
    const auto out = restrict_vocab(d, RestrictMode::topk, 3);
    CHECK((out.probs - d.probs).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("top-p 0.7 keeps the two largest and renormalizes") {
    const auto out = restrict_vocab(dist3(0.5, 0.3, 0.2), RestrictMode::topp, 0.7);
    CHECK(out.probs[0] == doctest::Approx(0.625));
    CHECK(out.probs[1] == doctest::Approx(0.375));
    CHECK(out.probs[2] == 0.0);
  }
  SUBCASE("one-hot distributions are unchanged") {
    const auto d = dist3(0.0, 1.0, 0.0);
    CHECK(restrict_vocab(d, RestrictMode::topk, 1).probs == d.probs);
    CHECK(restrict_vocab(d, RestrictMode::topp, 0.3).probs == d.probs);
  }
  SUBCASE("top-p 1.0 keeps the whole support (plain ancestral sampling)") {
    CounterRng rng(3);
    const auto d = random_distribution(rng, 9);
    const auto out = restrict_vocab(d, RestrictMode::topp, 1.0);
    CHECK((out.probs - d.probs).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("sorting ties break toward the lower token index") {
    WordDistribution d;
    d.probs = Eigen::Vector4d(0.25, 0.25, 0.25, 0.25);
    const auto out = restrict_vocab(d, RestrictMode::topk, 2);
    CHECK(out.probs[0] == doctest::Approx(0.5));
    CHECK(out.probs[1] == doctest::Approx(0.5));
    CHECK(out.probs[2] == 0.0);
    CHECK(out.probs[3] == 0.0);
  }
}

TEST_CASE("restrict_vocab preserves ratios among retained tokens") {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    CounterRng rng(mix_key(77, trial));
    const int n = 4 + static_cast<int>(rng.next_below(20));
    const auto d = random_distribution(rng, n);
    const int k = 2 + static_cast<int>(rng.next_below(n - 2));
    const auto out = restrict_vocab(d, RestrictMode::topk, k);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (out.probs[i] > 0 && out.probs[j] > 0) {
          CHECK(out.probs[i] / out.probs[j] ==
                doctest::Approx(d.probs[i] / d.probs[j]).epsilon(1e-9));
        }
      }
    }
    CHECK(out.valid());
  }
}

TEST_CASE("sample_next") {
  SUBCASE("one-hot always yields that token") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CounterRng rng(seed);
      CHECK(sample_next(dist3(0.0, 1.0, 0.0), rng) == 1);
    }
  }
  SUBCASE("same state gives the same token") {
    const auto d = dist3(0.2, 0.5, 0.3);
    CounterRng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(sample_next(d, a) == sample_next(d, b));
  }
  SUBCASE("empirical frequencies track the distribution within 3 sigma") {
    const auto d = dist3(0.2, 0.5, 0.3);
    const int n = 100000;
    CounterRng rng(7);
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) ++counts[sample_next(d, rng)];
    for (int t = 0; t < 3; ++t) {
      const double p = d.probs[t];
      const double sigma = std::sqrt(p * (1 - p) * n);
      CHECK(std::abs(counts[t] - p * n) < 3 * sigma);
    }
  }
}

namespace {

DecodingConfig topk_cfg(Strategy s, int k, int max_len = 8) {
  DecodingConfig c;
  c.strategy = s;
  c.k = k;
  c.max_len = max_len;
  return c;
}

}  // namespace

TEST_CASE("generate stops at eos and is deterministic") {
  TableCaptioner captioner;  // default: one-hot eos everywhere
  CalibrationContext ctx;
  ctx.target = dummy_patch();

  SUBCASE("one-hot eos yields an empty complete sequence") {
    CounterRng rng(1);
    const auto seq =
        generate(captioner, ctx, topk_cfg(Strategy::topk_naive, 2), rng);
    CHECK(seq.ids == std::vector<TokenId>{1});
    CHECK(seq.complete);
    CHECK(sequence_text(seq, captioner.vocabulary()).empty());
  }
  SUBCASE("fixed seed reproduces the sequence") {
    captioner.set({}, {0.0, 0.1, 0.5, 0.4});
    captioner.set({2}, {0.0, 0.3, 0.2, 0.5});
    captioner.set({3}, {0.0, 0.6, 0.2, 0.2});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CounterRng a(seed), b(seed);
      const auto s1 =
          generate(captioner, ctx, topk_cfg(Strategy::topk_naive, 3), a);
      const auto s2 =
          generate(captioner, ctx, topk_cfg(Strategy::topk_naive, 3), b);
      CHECK(s1 == s2);
    }
  }
  SUBCASE("max_len truncates and marks incomplete") {
    captioner.set({}, {0.0, 0.0, 1.0, 0.0});
    captioner.set({2}, {0.0, 0.0, 1.0, 0.0});
    captioner.set({2, 2}, {0.0, 0.0, 1.0, 0.0});
    CounterRng rng(1);
    const auto seq =
        generate(captioner, ctx, topk_cfg(Strategy::topk_naive, 1, 3), rng);
    CHECK(seq.ids.size() == 3);
    CHECK_FALSE(seq.complete);
  }
  SUBCASE("beam strategy is rejected by generate") {
    DecodingConfig c;
    c.strategy = Strategy::beam;
    CounterRng rng(1);
    CHECK_THROWS_AS(generate(captioner, ctx, c, rng), UsageError);
  }
}

TEST_CASE("distinctive generation never samples outside the target support") {
  // Raw target gives token y zero probability; the distractor spreads mass
  // there, and the calibration softmax would lift it off zero.
  TableCaptioner captioner;
  captioner.set({}, {0.0, 0.3, 0.7, 0.0});
  CalibrationContext ctx;
  ctx.target = dummy_patch();
  ctx.others.push_back(dummy_patch());
  ctx.sims = Eigen::VectorXd::Ones(1);

  DecodingConfig cfg = topk_cfg(Strategy::topk_distinctive, 4, 4);
  cfg.temperature = 1.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CounterRng rng(seed);
    const auto seq = generate(captioner, ctx, cfg, rng);
    for (const TokenId id : seq.ids) {
      CHECK(id != captioner.vocabulary().bos_id);
      CHECK(id != 3);  // zero-probability token stays unsampleable
    }
  }
}

namespace {

struct Enumerated {
  std::vector<TokenId> ids;
  double logprob;
  bool complete;
};

// Exhaustive enumeration oracle for beam search: walks every sequence up to
// max_len and applies the same finished-first, logprob-then-lex selection.
void enumerate_all(const TableCaptioner& captioner, std::vector<TokenId>& prefix,
                   double logprob, int max_len, std::vector<Enumerated>& out) {
  if (static_cast<int>(prefix.size()) == max_len) {
    out.push_back({prefix, logprob, false});
    return;
  }
  TokenSequence ts;
  ts.ids = prefix;
  const auto dist = captioner.next_word_dist(dummy_patch(), ts);
  for (TokenId t = 1; t < 4; ++t) {
    if (dist.probs[t] <= 0.0) continue;
    prefix.push_back(t);
    const double lp = logprob + std::log(dist.probs[t]);
    if (t == 1) {
      out.push_back({prefix, lp, true});
    } else {
      enumerate_all(captioner, prefix, lp, max_len, out);
    }
    prefix.pop_back();
  }
}

}  // namespace

TEST_CASE("beam search matches exhaustive enumeration on a toy model") {
  TableCaptioner captioner;
  captioner.set({}, {0.0, 0.1, 0.6, 0.3});
  captioner.set({2}, {0.0, 0.3, 0.2, 0.5});
  captioner.set({3}, {0.0, 0.3, 0.7, 0.0});
  captioner.set({2, 2}, {0.0, 0.9, 0.1, 0.0});
  captioner.set({2, 3}, {0.0, 1.0, 0.0, 0.0});
  captioner.set({3, 2}, {0.0, 0.6, 0.0, 0.4});

  std::vector<Enumerated> all;
  std::vector<TokenId> prefix;
  enumerate_all(captioner, prefix, 0.0, 3, all);
  REQUIRE(!all.empty());
  const auto best = [&](bool completed) {
    const Enumerated* b = nullptr;
    for (const auto& e : all) {
      if (e.complete != completed) continue;
      if (!b || e.logprob > b->logprob ||
          (e.logprob == b->logprob && e.ids < b->ids)) {
        b = &e;
      }
    }
    return b;
  };
  const Enumerated* expected = best(true);
  REQUIRE(expected != nullptr);

  // width 32 >= 3^3 makes beam search exhaustive here
  const auto seq = beam_search(captioner, dummy_patch(), 32, 3);
  CHECK(seq.complete);
  CHECK(seq.ids == expected->ids);

  SUBCASE("deterministic across calls") {
    const auto again = beam_search(captioner, dummy_patch(), 32, 3);
    CHECK(again == seq);
  }
}

TEST_CASE("beam search falls back to the best unfinished beam") {
  TableCaptioner captioner;  // eos unreachable within max_len
  captioner.set({}, {0.0, 0.0, 0.7, 0.3});
  captioner.set({2}, {0.0, 0.0, 0.2, 0.8});
  captioner.set({3}, {0.0, 0.0, 0.5, 0.5});
  captioner.set({2, 3}, {0.0, 0.0, 1.0, 0.0});
  captioner.set({2, 2}, {0.0, 0.0, 1.0, 0.0});
  captioner.set({3, 2}, {0.0, 0.0, 1.0, 0.0});
  captioner.set({3, 3}, {0.0, 0.0, 1.0, 0.0});
  const auto seq = beam_search(captioner, dummy_patch(), 4, 3);
  CHECK_FALSE(seq.complete);
  CHECK(seq.ids.size() == 3);
  // joint probabilities: x,y,* = 0.56 dominates
  CHECK(seq.ids == std::vector<TokenId>{2, 3, 2});
}

TEST_CASE("beam width 1 equals greedy") {
  TableCaptioner captioner;
  captioner.set({}, {0.0, 0.1, 0.6, 0.3});
  captioner.set({2}, {0.0, 0.3, 0.2, 0.5});
  captioner.set({2, 3}, {0.0, 1.0, 0.0, 0.0});

  const auto beam = beam_search(captioner, dummy_patch(), 1, 5);
  const auto greedy = greedy_decode(captioner, dummy_patch(), 5);
  CHECK(beam.ids == greedy.ids);
  CHECK(beam.complete == greedy.complete);
  CHECK(greedy.ids == std::vector<TokenId>{2, 3, 1});
}

TEST_CASE("default grid shape") {
  const auto grid = default_decoding_grid();
  REQUIRE(grid.size() == 11);
  CHECK(grid[0].strategy == Strategy::beam);
  CHECK(grid[0].beam_width == 5);
  const std::vector<int> ks = {5, 7, 9, 11, 13};
  for (int i = 0; i < 5; ++i) {
    CHECK(grid[1 + i].strategy == Strategy::topk_distinctive);
    CHECK(grid[1 + i].k == ks[static_cast<std::size_t>(i)]);
  }
  const std::vector<double> ps = {0.4, 0.5, 0.6, 0.7, 0.8};
  for (int i = 0; i < 5; ++i) {
    CHECK(grid[6 + i].strategy == Strategy::topp_distinctive);
    CHECK(grid[6 + i].p == doctest::Approx(ps[static_cast<std::size_t>(i)]));
  }
  for (const auto& c : grid) CHECK_NOTHROW(c.validate());

  const auto naive = naive_decoding_grid();
  REQUIRE(naive.size() == 11);
  CHECK(naive[1].strategy == Strategy::topk_naive);
  CHECK(naive[6].strategy == Strategy::topp_naive);
}

TEST_CASE("decoding config validation") {
  DecodingConfig c;
  c.strategy = Strategy::topk_distinctive;
  c.k = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.k = 5;
  c.temperature = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.temperature = 1.0;
  CHECK_NOTHROW(c.validate());
  c.strategy = Strategy::topp_distinctive;
  c.p = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
