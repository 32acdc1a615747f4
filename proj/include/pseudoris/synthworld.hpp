#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "pseudoris/pipeline.hpp"

namespace pseudoris {
namespace synth {

// Token inventory of the synthetic world: object categories, attributes
// partitioned into families (color, size, accessory), and function words.
// Categories, attributes and function words are pairwise disjoint and all
// appear in the shared vocabulary.
struct AttributeSpace {
  std::vector<std::string> categories;
  std::vector<std::vector<std::string>> attribute_families;
  std::vector<std::string> function_words;

  static const AttributeSpace& standard();

  std::vector<std::string> all_attributes() const;
  Vocabulary vocabulary() const;
  bool is_function_word(const std::string& tok) const;
  int category_index(const std::string& tok) const;   // -1 when absent
  int attribute_index(const std::string& tok) const;  // global index, -1 when absent
};

// Axis-aligned object: one category, at most one attribute per family.
struct SynthObject {
  int id = -1;
  std::string category;
  std::vector<std::string> attributes;
  PixelBox rect;

  // category plus attributes.
  std::set<std::string> descriptors() const;
};

struct Scene {
  std::string id;
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
  std::vector<SynthObject> objects;
};

// Deterministic scene construction on a grid layout. `overlap_level` is the
// probability that an object takes the scene-wide base value for its
// category and for each shared attribute family; at 1.0 all objects share
// the category and every family except color, which stays pairwise distinct
// (up to the color inventory size).
Scene make_scene(std::uint64_t seed, int n_objects, double overlap_level,
                 int width = 96, int height = 96);

// Seeded list of scenes with ids "synth-NNNNNN".
std::vector<Scene> make_corpus(std::uint64_t seed, int n_scenes, int n_objects,
                               double overlap_level);

// Renders a scene into an image whose pixels encode object identity:
// R = 10 * (object index + 1), G = 20 * (category index + 1),
// B = attribute bitmask. Background is zero. Patches cropped from such an
// image are therefore self-describing, which keeps the reference backends
// pure functions of their inputs.
Image render_scene(const Scene& scene);

// One rectangle mask per object, in object order.
std::vector<BinaryMask> scene_masks(const Scene& scene);

// Objects visible in a patch, decoded from its pixels.
struct DecodedObject {
  int object_index = -1;
  int category_index = -1;
  std::uint8_t attribute_mask = 0;
  std::int64_t pixel_count = 0;
};

// Sorted by object index; throws ContractError when no object pixel is
// present.
std::vector<DecodedObject> decode_patch(const Patch& patch);

// Reference captioner: a grammar-state machine over
// "<a> <attr>* <category> <eos>". At the attribute/category step, mass alpha
// goes to the primary (largest-coverage) object's tokens, beta to visible
// distractors' tokens, gamma to the rest of the inventory; embeddings are
// normalized bags of descriptors.
class SynthCaptioner : public CaptionerBackend {
 public:
  SynthCaptioner();

  const Vocabulary& vocabulary() const override { return vocab_; }
  VisualEmbedding embed(const Patch& patch) const override;
  WordDistribution next_word_dist(const Patch& patch,
                                  const TokenSequence& prefix) const override;

  static constexpr double kAlpha = 0.6;
  static constexpr double kBeta = 0.3;
  static constexpr double kGamma = 0.1;

 private:
  const AttributeSpace& space_;
  Vocabulary vocab_;
};

// Reference scorer: fraction of the text's content words that are
// descriptors of the patch's primary object, floored at kScoreFloor.
// Unmasked patches also give half credit for descriptors of visible
// distractors.
class SynthScorer : public ScorerBackend {
 public:
  SynthScorer();
  double score(const Patch& patch, const std::string& text) const override;

 private:
  const AttributeSpace& space_;
};

// Reference extractor: one mask per encoded object index.
class SynthMaskExtractor : public MaskExtractorBackend {
 public:
  std::vector<BinaryMask> extract(const Image& image) const override;
};

// Registers "synth" implementations for all three roles. Safe to call once
// per registry.
void register_synthetic_backends(BackendRegistry& registry);

PipelineBackends synthetic_backends();

// Brute-force referring resolution: ids of all objects for which every
// content word of the caption is a descriptor.
std::set<int> oracle_resolve(const std::string& caption, const Scene& scene);

// Fraction of kept captions that resolve to exactly their own mask's object.
// Annotation mask indices map to scene object ids. Empty kept set -> 0.
double uniqueness_rate(const std::vector<PseudoAnnotation>& annotations,
                       const std::vector<Scene>& scenes);

struct BenchmarkConfig {
  std::uint64_t seed = 0;
  int n_scenes = 50;
  int n_objects = 4;
  double overlap = 1.0;
};

struct BenchmarkVariant {
  std::string name;
  std::vector<DecodingConfig> grid;
  bool filtering = false;
};

// naive / naive+filter / distinctive / distinctive+filter.
std::vector<BenchmarkVariant> default_benchmark_variants();

struct BenchmarkRow {
  std::string name;
  double uniqueness = 0.0;
  double mean_dos = 0.0;  // over finite pre-filter candidate scores
  double kept_fraction = 0.0;
  std::int64_t kept = 0;
  std::int64_t total = 0;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<BenchmarkRow> rows;
};

BenchmarkReport run_benchmark(const BenchmarkConfig& config,
                              const std::vector<BenchmarkVariant>& variants =
                                  default_benchmark_variants());

}  // namespace synth
}  // namespace pseudoris
