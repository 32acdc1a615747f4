#include <doctest.h>

#include "pseudoris/backends.hpp"
#include "pseudoris/synthworld.hpp"
#include "test_support.hpp"

using namespace pseudoris;

TEST_CASE("vocabulary invariants") {
  Vocabulary v;
  v.tokens = {"<bos>", "<eos>", "a"};
  v.bos_id = 0;
  v.eos_id = 1;
  CHECK_NOTHROW(v.validate());

  Vocabulary dup = v;
  dup.tokens = {"<bos>", "<bos>", "a"};
  CHECK_THROWS_AS(dup.validate(), UsageError);

  Vocabulary same = v;
  same.eos_id = 0;
  CHECK_THROWS_AS(same.validate(), UsageError);

  Vocabulary range = v;
  range.eos_id = 9;
  CHECK_THROWS_AS(range.validate(), UsageError);
}

TEST_CASE("sequence text skips bos and eos") {
  Vocabulary v;
  v.tokens = {"<bos>", "<eos>", "a", "cow"};
  v.bos_id = 0;
  v.eos_id = 1;
  TokenSequence seq;
  seq.ids = {2, 3, 1};
  seq.complete = true;
  CHECK(sequence_text(seq, v) == "a cow");
  CHECK(sequence_text(TokenSequence{}, v) == "");
}

TEST_CASE("word distribution validity") {
  WordDistribution d;
  d.probs = Eigen::Vector3d(0.5, 0.3, 0.2);
  CHECK(d.valid());
  d.probs = Eigen::Vector3d(0.5, 0.3, 0.1);
  CHECK_FALSE(d.valid());
  d.probs = Eigen::Vector3d(1.2, -0.1, -0.1);
  CHECK_FALSE(d.valid());
}

TEST_CASE("registry registration and resolution") {
  BackendRegistry registry;
  synth::register_synthetic_backends(registry);

  auto captioner = registry.resolve_captioner("synth");
  REQUIRE(captioner != nullptr);
  // resolution is idempotent: same cached instance every time
  CHECK(registry.resolve_captioner("synth").get() == captioner.get());
  CHECK(registry.resolve_scorer("synth") != nullptr);
  CHECK(registry.resolve_mask_extractor("synth") != nullptr);

  SUBCASE("duplicate names are rejected per kind") {
    CHECK_THROWS_AS(
        registry.register_captioner(
            "synth", [] { return std::make_shared<synth::SynthCaptioner>(); }),
        RegistrationError);
  }
  SUBCASE("missing names produce a lookup error listing alternatives") {
    try {
      registry.resolve_captioner("missing");
      FAIL("expected LookupError");
    } catch (const LookupError& e) {
      CHECK(std::string(e.what()).find("synth") != std::string::npos);
    }
  }
  SUBCASE("enumeration is sorted") {
    registry.register_captioner(
        "alpha", [] { return std::make_shared<synth::SynthCaptioner>(); });
    registry.register_captioner(
        "zeta", [] { return std::make_shared<synth::SynthCaptioner>(); });
    const auto names = registry.names(BackendKind::captioner);
    CHECK(names == std::vector<std::string>{"alpha", "synth", "zeta"});
  }
  SUBCASE("exclusive flag round-trips") {
    registry.register_scorer(
        "solo", [] { return std::make_shared<synth::SynthScorer>(); },
        /*exclusive=*/true);
    CHECK(registry.is_exclusive(BackendKind::scorer, "solo"));
    CHECK_FALSE(registry.is_exclusive(BackendKind::scorer, "synth"));
    CHECK_THROWS_AS(registry.is_exclusive(BackendKind::scorer, "nope"),
                    LookupError);
  }
}

TEST_CASE("registry misuse") {
  BackendRegistry registry;
  CHECK_THROWS_AS(registry.register_scorer(
                      "", [] { return std::make_shared<synth::SynthScorer>(); }),
                  UsageError);
  CHECK_THROWS_AS(registry.register_scorer("x", nullptr), UsageError);
  CHECK_THROWS_AS(backend_kind_from_string("oracle"), UsageError);
  CHECK(backend_kind_from_string("scorer") == BackendKind::scorer);
}

TEST_CASE("synthetic backends satisfy the contracts") {
  const auto scene = synth::make_scene(11, 3, 0.5);
  const Image image = synth::render_scene(scene);
  const auto masks = synth::scene_masks(scene);
  synth::SynthCaptioner captioner;
  synth::SynthScorer scorer;

  for (std::size_t i = 0; i < masks.size(); ++i) {
    for (const auto& spec : canonical_crop_specs()) {
      const Patch p = crop(image, masks[i], spec, static_cast<int>(i));
      CHECK(captioner.embed(p).unit_norm());
      TokenSequence prefix;
      for (int step = 0; step < 4; ++step) {
        const WordDistribution d = captioner.next_word_dist(p, prefix);
        CHECK(d.valid());
        CHECK(d.size() == captioner.vocabulary().size());
        // deterministic for identical inputs
        const WordDistribution again = captioner.next_word_dist(p, prefix);
        CHECK(d.probs == again.probs);
        TokenId best = 0;
        d.probs.maxCoeff(&best);
        prefix.ids.push_back(best);
      }
      CHECK(scorer.score(p, "a brown cow") >= kScoreFloor);
    }
  }
}
