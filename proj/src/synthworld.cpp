#include "pseudoris/synthworld.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "pseudoris/rng.hpp"

namespace pseudoris {
namespace synth {

namespace {

constexpr int kObjectPixelStep = 10;    // R channel: 10 * (object index + 1)
constexpr int kCategoryPixelStep = 20;  // G channel: 20 * (category index + 1)
constexpr int kMaxObjects = 24;
constexpr int kMinCellSize = 12;

std::vector<std::string> tokenize_lower(const std::string& text) {
  std::string lowered = text;
  for (char& c : lowered) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  std::istringstream in(lowered);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

const AttributeSpace& AttributeSpace::standard() {
  static const AttributeSpace space{
      {"cow", "man", "chair", "dog", "bird"},
      {{"brown", "white", "black", "gray"},  // color
       {"small", "large"},                   // size
       {"bell", "ribbon"}},                  // accessory
      {"a", "the", "with"},
  };
  return space;
}

std::vector<std::string> AttributeSpace::all_attributes() const {
  std::vector<std::string> out;
  for (const auto& family : attribute_families) {
    out.insert(out.end(), family.begin(), family.end());
  }
  return out;
}

Vocabulary AttributeSpace::vocabulary() const {
  Vocabulary v;
  v.tokens.push_back("<bos>");
  v.tokens.push_back("<eos>");
  v.bos_id = 0;
  v.eos_id = 1;
  for (const auto& t : function_words) v.tokens.push_back(t);
  for (const auto& t : categories) v.tokens.push_back(t);
  for (const auto& t : all_attributes()) v.tokens.push_back(t);
  v.validate();
  return v;
}

bool AttributeSpace::is_function_word(const std::string& tok) const {
  return std::find(function_words.begin(), function_words.end(), tok) !=
         function_words.end();
}

int AttributeSpace::category_index(const std::string& tok) const {
  const auto it = std::find(categories.begin(), categories.end(), tok);
  return it == categories.end() ? -1
                                : static_cast<int>(it - categories.begin());
}

int AttributeSpace::attribute_index(const std::string& tok) const {
  int idx = 0;
  for (const auto& family : attribute_families) {
    for (const auto& t : family) {
      if (t == tok) return idx;
      ++idx;
    }
  }
  return -1;
}

std::set<std::string> SynthObject::descriptors() const {
  std::set<std::string> d(attributes.begin(), attributes.end());
  d.insert(category);
  return d;
}

Scene make_scene(std::uint64_t seed, int n_objects, double overlap_level,
                 int width, int height) {
  if (n_objects < 1) throw UsageError("make_scene: n_objects must be >= 1");
  if (n_objects > kMaxObjects) {
    throw ConfigError("make_scene: cannot place " + std::to_string(n_objects) +
                      " objects (max " + std::to_string(kMaxObjects) + ")");
  }
  if (overlap_level < 0.0 || overlap_level > 1.0) {
    throw UsageError("make_scene: overlap_level must be in [0, 1]");
  }
  const AttributeSpace& space = AttributeSpace::standard();
  const auto& colors = space.attribute_families[0];
  const auto& sizes = space.attribute_families[1];
  const auto& accessories = space.attribute_families[2];

  const int cols = static_cast<int>(std::ceil(std::sqrt(n_objects)));
  const int rows = (n_objects + cols - 1) / cols;
  const int cell_w = width / cols;
  const int cell_h = height / rows;
  if (cell_w < kMinCellSize || cell_h < kMinCellSize) {
    throw ConfigError("make_scene: " + std::to_string(n_objects) +
                      " objects do not fit a " + std::to_string(width) + "x" +
                      std::to_string(height) + " grid");
  }

  CounterRng rng(mix_key(seed, 0x5ce2eULL));
  const std::size_t base_category = rng.next_below(space.categories.size());
  const std::size_t base_size = rng.next_below(sizes.size());
  const std::size_t base_accessory = rng.next_below(accessories.size());
  const std::size_t color_offset = rng.next_below(colors.size());

  Scene scene;
  scene.width = width;
  scene.height = height;
  scene.seed = seed;
  // The in-cell border is wide enough that canonical crop margins (<= 20%)
  // never reach a neighboring object: rects span at most 3/5 of a cell, so a
  // 20% margin (~0.12 cell) stays inside the 0.2-cell border.
  const int border_w = std::max(1, cell_w / 5);
  const int border_h = std::max(1, cell_h / 5);
  for (int k = 0; k < n_objects; ++k) {
    const int cx = (k % cols) * cell_w;
    const int cy = (k / cols) * cell_h;
    const int avail_w = cell_w - 2 * border_w;
    const int avail_h = cell_h - 2 * border_h;
    const int w = avail_w / 2 + static_cast<int>(rng.next_below(avail_w / 2 + 1));
    const int h = avail_h / 2 + static_cast<int>(rng.next_below(avail_h / 2 + 1));
    const int ox = border_w + static_cast<int>(rng.next_below(avail_w - w + 1));
    const int oy = border_h + static_cast<int>(rng.next_below(avail_h - h + 1));

    SynthObject obj;
    obj.id = k;
    obj.rect = {cx + ox, cy + oy, cx + ox + w - 1, cy + oy + h - 1};
    obj.category = rng.next_double() < overlap_level
                       ? space.categories[base_category]
                       : space.categories[rng.next_below(space.categories.size())];
    // Colors rotate through the inventory so the scene stays resolvable at
    // full overlap; the cycle breaks distinctness only past four objects.
    obj.attributes.push_back(colors[(color_offset + k) % colors.size()]);
    obj.attributes.push_back(rng.next_double() < overlap_level
                                 ? sizes[base_size]
                                 : sizes[rng.next_below(sizes.size())]);
    obj.attributes.push_back(rng.next_double() < overlap_level
                                 ? accessories[base_accessory]
                                 : accessories[rng.next_below(accessories.size())]);
    scene.objects.push_back(std::move(obj));
  }
  return scene;
}

std::vector<Scene> make_corpus(std::uint64_t seed, int n_scenes, int n_objects,
                               double overlap_level) {
  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(n_scenes));
  for (int i = 0; i < n_scenes; ++i) {
    Scene s = make_scene(mix_key(seed, static_cast<std::uint64_t>(i)), n_objects,
                         overlap_level);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "synth-%06d", i);
    s.id = buf;
    scenes.push_back(std::move(s));
  }
  return scenes;
}

Image render_scene(const Scene& scene) {
  const AttributeSpace& space = AttributeSpace::standard();
  Image img = Image::blank(scene.id, scene.width, scene.height);
  for (const auto& obj : scene.objects) {
    const int cat = space.category_index(obj.category);
    if (cat < 0) throw StateError("render_scene: unknown category " + obj.category);
    std::uint8_t attr_mask = 0;
    for (const auto& a : obj.attributes) {
      const int idx = space.attribute_index(a);
      if (idx < 0 || idx > 7) throw StateError("render_scene: bad attribute " + a);
      attr_mask = static_cast<std::uint8_t>(attr_mask | (1u << idx));
    }
    const auto r = static_cast<std::uint8_t>(kObjectPixelStep * (obj.id + 1));
    const auto g = static_cast<std::uint8_t>(kCategoryPixelStep * (cat + 1));
    const int bw = obj.rect.width();
    const int bh = obj.rect.height();
    img.channels[0].block(obj.rect.y0, obj.rect.x0, bh, bw).setConstant(r);
    img.channels[1].block(obj.rect.y0, obj.rect.x0, bh, bw).setConstant(g);
    img.channels[2].block(obj.rect.y0, obj.rect.x0, bh, bw).setConstant(attr_mask);
  }
  return img;
}

std::vector<BinaryMask> scene_masks(const Scene& scene) {
  std::vector<BinaryMask> masks;
  masks.reserve(scene.objects.size());
  for (const auto& obj : scene.objects) {
    BoolGrid bits = BoolGrid::Constant(scene.height, scene.width, false);
    bits.block(obj.rect.y0, obj.rect.x0, obj.rect.height(), obj.rect.width())
        .setConstant(true);
    masks.push_back(BinaryMask::from_bits(std::move(bits)));
  }
  return masks;
}

std::vector<DecodedObject> decode_patch(const Patch& patch) {
  std::map<int, DecodedObject> found;
  const auto& r = patch.pixels[0];
  const auto& g = patch.pixels[1];
  const auto& b = patch.pixels[2];
  for (Eigen::Index col = 0; col < r.cols(); ++col) {
    for (Eigen::Index row = 0; row < r.rows(); ++row) {
      const int rv = r(row, col);
      if (rv == 0) continue;  // background
      const int index = rv / kObjectPixelStep - 1;
      auto& obj = found[index];
      obj.object_index = index;
      obj.category_index = g(row, col) / kCategoryPixelStep - 1;
      obj.attribute_mask = b(row, col);
      ++obj.pixel_count;
    }
  }
  if (found.empty()) {
    throw ContractError("decode_patch: patch covers no object");
  }
  std::vector<DecodedObject> out;
  out.reserve(found.size());
  for (auto& [_, obj] : found) out.push_back(obj);
  return out;
}

namespace {

// Primary object: largest pixel coverage, ties to the lowest index.
std::size_t primary_index(const std::vector<DecodedObject>& objs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < objs.size(); ++i) {
    if (objs[i].pixel_count > objs[best].pixel_count) best = i;
  }
  return best;
}

std::vector<std::string> decoded_attributes(const AttributeSpace& space,
                                            std::uint8_t mask) {
  std::vector<std::string> out;
  const auto all = space.all_attributes();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (mask & (1u << i)) out.push_back(all[i]);
  }
  return out;
}

std::set<std::string> decoded_descriptors(const AttributeSpace& space,
                                          const DecodedObject& obj) {
  auto attrs = decoded_attributes(space, obj.attribute_mask);
  std::set<std::string> d(attrs.begin(), attrs.end());
  d.insert(space.categories.at(static_cast<std::size_t>(obj.category_index)));
  return d;
}

}  // namespace

SynthCaptioner::SynthCaptioner()
    : space_(AttributeSpace::standard()), vocab_(space_.vocabulary()) {}

VisualEmbedding SynthCaptioner::embed(const Patch& patch) const {
  const auto objs = decode_patch(patch);
  const auto& primary = objs[primary_index(objs)];
  const auto all_attrs = space_.all_attributes();
  const int dim = static_cast<int>(space_.categories.size() + all_attrs.size());

  // Bag of descriptors: same-category objects land close together, which is
  // what makes the similarity weighting meaningful.
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  v[primary.category_index] = 1.0;
  for (std::size_t i = 0; i < all_attrs.size(); ++i) {
    if (primary.attribute_mask & (1u << i)) {
      v[static_cast<Eigen::Index>(space_.categories.size() + i)] = 1.0;
    }
  }
  VisualEmbedding e;
  e.vec = v / v.norm();
  return e;
}

WordDistribution SynthCaptioner::next_word_dist(const Patch& patch,
                                                const TokenSequence& prefix) const {
  const auto objs = decode_patch(patch);
  const std::size_t prim = primary_index(objs);

  WordDistribution dist;
  dist.probs = Eigen::VectorXd::Zero(vocab_.size());

  if (prefix.ids.empty()) {
    dist.probs[vocab_.find("a")] = 1.0;
    return dist;
  }

  // Emitted so far, and whether a category has been produced (terminal).
  std::set<std::string> emitted_attrs;
  for (const TokenId id : prefix.ids) {
    const std::string& tok = vocab_.token(id);
    if (space_.category_index(tok) >= 0) {
      dist.probs[vocab_.eos_id] = 1.0;
      return dist;
    }
    if (space_.attribute_index(tok) >= 0) emitted_attrs.insert(tok);
  }

  const auto primary_desc = decoded_attributes(space_, objs[prim].attribute_mask);
  std::set<std::string> primary_attrs(primary_desc.begin(), primary_desc.end());
  std::set<std::string> distractor_attrs;
  std::set<std::string> distractor_cats;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (i == prim) continue;
    for (const auto& a : decoded_attributes(space_, objs[i].attribute_mask)) {
      distractor_attrs.insert(a);
    }
    distractor_cats.insert(
        space_.categories.at(static_cast<std::size_t>(objs[i].category_index)));
  }
  const std::string primary_cat =
      space_.categories.at(static_cast<std::size_t>(objs[prim].category_index));
  distractor_cats.erase(primary_cat);

  // With no distractor in view there is nothing to hedge toward: the beta
  // and gamma budgets both fold onto the primary object, so isolated patches
  // only ever describe what they show.
  const bool isolated = objs.size() == 1;

  std::vector<std::string> ap, ad, ar;
  for (const auto& a : space_.all_attributes()) {
    if (emitted_attrs.count(a)) continue;
    const bool in_p = primary_attrs.count(a) > 0;
    const bool in_d = distractor_attrs.count(a) > 0;
    if (in_p) ap.push_back(a);
    if (in_d) ad.push_back(a);
    if (!in_p && !in_d && !isolated) ar.push_back(a);
  }

  // Chance of adding another attribute decays with how many were emitted.
  double attr_weight = emitted_attrs.empty() ? 0.5
                       : emitted_attrs.size() == 1 ? 0.25
                                                   : 0.1;
  if (ap.empty()) attr_weight = 0.0;

  if (attr_weight > 0.0) {
    // Empty groups fold their budget into the primary share, so the block
    // always carries exactly attr_weight of mass.
    double alpha = kAlpha, beta = kBeta, gamma = kGamma;
    if (ad.empty()) {
      alpha += beta;
      beta = 0.0;
    }
    if (ar.empty()) {
      alpha += gamma;
      gamma = 0.0;
    }
    for (const auto& a : ap) {
      dist.probs[vocab_.find(a)] += attr_weight * alpha / ap.size();
    }
    for (const auto& a : ad) {
      dist.probs[vocab_.find(a)] += attr_weight * beta / ad.size();
    }
    for (const auto& a : ar) {
      dist.probs[vocab_.find(a)] += attr_weight * gamma / ar.size();
    }
  }

  const double cat_weight = 1.0 - attr_weight;
  std::vector<std::string> cr;
  if (!isolated) {
    for (const auto& c : space_.categories) {
      if (c != primary_cat && !distractor_cats.count(c)) cr.push_back(c);
    }
  }
  double alpha = kAlpha, beta = kBeta, gamma = kGamma;
  if (distractor_cats.empty()) {
    alpha += beta;
    beta = 0.0;
  }
  if (cr.empty()) {
    alpha += gamma;
    gamma = 0.0;
  }
  dist.probs[vocab_.find(primary_cat)] += cat_weight * alpha;
  for (const auto& c : distractor_cats) {
    dist.probs[vocab_.find(c)] += cat_weight * beta / distractor_cats.size();
  }
  for (const auto& c : cr) {
    dist.probs[vocab_.find(c)] += cat_weight * gamma / cr.size();
  }

  dist.probs /= dist.probs.sum();
  return dist;
}

SynthScorer::SynthScorer() : space_(AttributeSpace::standard()) {}

double SynthScorer::score(const Patch& patch, const std::string& text) const {
  const auto objs = decode_patch(patch);
  const std::size_t prim = primary_index(objs);
  const auto primary_desc = decoded_descriptors(space_, objs[prim]);

  std::set<std::string> visible_desc;
  if (!patch.spec.masked) {
    for (std::size_t i = 0; i < objs.size(); ++i) {
      if (i == prim) continue;
      for (const auto& d : decoded_descriptors(space_, objs[i])) {
        visible_desc.insert(d);
      }
    }
  }

  double credit = 0.0;
  int content = 0;
  for (const auto& tok : tokenize_lower(text)) {
    if (space_.is_function_word(tok) || tok == "<bos>" || tok == "<eos>") continue;
    ++content;
    if (primary_desc.count(tok)) {
      credit += 1.0;
    } else if (visible_desc.count(tok)) {
      credit += 0.5;
    }
  }
  if (content == 0) return kScoreFloor;
  return std::max(credit / content, kScoreFloor);
}

std::vector<BinaryMask> SynthMaskExtractor::extract(const Image& image) const {
  std::map<int, BoolGrid> grids;
  const auto& r = image.channels[0];
  for (Eigen::Index col = 0; col < r.cols(); ++col) {
    for (Eigen::Index row = 0; row < r.rows(); ++row) {
      const int rv = r(row, col);
      if (rv == 0) continue;
      const int index = rv / kObjectPixelStep - 1;
      auto it = grids.find(index);
      if (it == grids.end()) {
        it = grids.emplace(index, BoolGrid::Constant(image.height, image.width,
                                                     false))
                 .first;
      }
      it->second(row, col) = true;
    }
  }
  std::vector<BinaryMask> masks;
  masks.reserve(grids.size());
  for (auto& [_, bits] : grids) {
    masks.push_back(BinaryMask::from_bits(std::move(bits)));
  }
  return masks;
}

void register_synthetic_backends(BackendRegistry& registry) {
  registry.register_captioner("synth",
                              [] { return std::make_shared<SynthCaptioner>(); });
  registry.register_scorer("synth", [] { return std::make_shared<SynthScorer>(); });
  registry.register_mask_extractor(
      "synth", [] { return std::make_shared<SynthMaskExtractor>(); });
}

PipelineBackends synthetic_backends() {
  PipelineBackends b;
  b.captioner = std::make_shared<SynthCaptioner>();
  b.scorer = std::make_shared<SynthScorer>();
  b.mask_extractor = std::make_shared<SynthMaskExtractor>();
  return b;
}

std::set<int> oracle_resolve(const std::string& caption, const Scene& scene) {
  const AttributeSpace& space = AttributeSpace::standard();
  std::vector<std::string> content;
  for (const auto& tok : tokenize_lower(caption)) {
    if (space.is_function_word(tok) || tok == "<bos>" || tok == "<eos>") continue;
    content.push_back(tok);
  }
  std::set<int> matches;
  for (const auto& obj : scene.objects) {
    const auto desc = obj.descriptors();
    const bool all = std::all_of(content.begin(), content.end(),
                                 [&](const std::string& w) {
                                   return desc.count(w) > 0;
                                 });
    if (all) matches.insert(obj.id);
  }
  return matches;
}

double uniqueness_rate(const std::vector<PseudoAnnotation>& annotations,
                       const std::vector<Scene>& scenes) {
  std::map<std::string, const Scene*> by_id;
  for (const auto& s : scenes) by_id[s.id] = &s;

  std::int64_t kept = 0;
  std::int64_t unique = 0;
  for (const auto& ann : annotations) {
    const auto it = by_id.find(ann.image_id);
    if (it == by_id.end()) {
      throw LookupError("uniqueness_rate: no scene with id " + ann.image_id);
    }
    for (const auto& cap : ann.captions) {
      ++kept;
      const auto resolved = oracle_resolve(cap.text, *it->second);
      if (resolved.size() == 1 && *resolved.begin() == ann.mask_index) ++unique;
    }
  }
  if (kept == 0) return 0.0;
  return static_cast<double>(unique) / static_cast<double>(kept);
}

std::vector<BenchmarkVariant> default_benchmark_variants() {
  return {
      {"naive", naive_decoding_grid(), false},
      {"naive+filter", naive_decoding_grid(), true},
      {"distinctive", default_decoding_grid(), false},
      {"distinctive+filter", default_decoding_grid(), true},
  };
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config,
                              const std::vector<BenchmarkVariant>& variants) {
  const auto scenes =
      make_corpus(config.seed, config.n_scenes, config.n_objects, config.overlap);
  const PipelineBackends backends = synthetic_backends();

  BenchmarkReport report;
  report.config = config;
  for (const auto& variant : variants) {
    PipelineConfig pcfg;
    pcfg.decoding_configs = variant.grid;
    pcfg.filter.metric = FilterMetric::distinctiveness;
    pcfg.filter.tau = variant.filtering ? 1.3 : 0.0;
    pcfg.seed = config.seed;

    BenchmarkRow row;
    row.name = variant.name;
    double dos_sum = 0.0;
    std::int64_t dos_count = 0;
    std::vector<PseudoAnnotation> annotations;
    for (const auto& scene : scenes) {
      const Image image = render_scene(scene);
      const auto masks = scene_masks(scene);
      auto generated = generate_candidates(image, masks, backends, pcfg);
      score_candidates(generated.candidates, masks, image, backends);
      for (const auto& c : generated.candidates) {
        row.total += 1;
        if (std::isfinite(c.dos)) {
          dos_sum += c.dos;
          ++dos_count;
        }
      }
      auto anns = group_and_filter(generated.candidates, masks, image, "",
                                   pcfg.filter);
      for (auto& a : anns) {
        row.kept += static_cast<std::int64_t>(a.captions.size());
        annotations.push_back(std::move(a));
      }
    }
    row.uniqueness = uniqueness_rate(annotations, scenes);
    row.mean_dos = dos_count > 0 ? dos_sum / static_cast<double>(dos_count)
                                 : std::numeric_limits<double>::infinity();
    row.kept_fraction =
        row.total > 0 ? static_cast<double>(row.kept) / static_cast<double>(row.total)
                      : 0.0;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace synth
}  // namespace pseudoris
