#include "pseudoris/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <set>
#include <sstream>

namespace pseudoris {

void PipelineConfig::validate() const {
  if (crop_specs.empty()) throw ConfigError("pipeline: no crop specs");
  if (decoding_configs.empty()) throw ConfigError("pipeline: no decoding configs");
  for (const auto& c : decoding_configs) c.validate();
  filter.validate();
  if (captioner.empty() || scorer.empty() || mask_source.empty()) {
    throw ConfigError("pipeline: backend names must be nonempty");
  }
}

std::int64_t caption_vocabulary_size(
    const std::vector<PseudoAnnotation>& annotations) {
  std::set<std::string> vocab;
  for (const auto& ann : annotations) {
    for (const auto& cap : ann.captions) {
      std::istringstream in(cap.text);
      std::string tok;
      while (in >> tok) {
        for (char& c : tok) {
          c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        vocab.insert(tok);
      }
    }
  }
  return static_cast<std::int64_t>(vocab.size());
}

PipelineBackends resolve_pipeline_backends(BackendRegistry& registry,
                                           const PipelineConfig& config) {
  PipelineBackends b;
  b.captioner = registry.resolve_captioner(config.captioner);
  b.scorer = registry.resolve_scorer(config.scorer);
  if (config.mask_source != "file") {
    b.mask_extractor = registry.resolve_mask_extractor(config.mask_source);
  }
  return b;
}

CandidateGenerationResult generate_candidates(const Image& image,
                                              const std::vector<BinaryMask>& masks,
                                              const PipelineBackends& backends,
                                              const PipelineConfig& config) {
  config.validate();
  if (!backends.captioner) throw StateError("generate_candidates: no captioner");

  CandidateGenerationResult result;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    for (std::size_t c = 0; c < config.crop_specs.size(); ++c) {
      const CropSpec& spec = config.crop_specs[c];
      CalibrationContext ctx;
      try {
        Patch target = crop(image, masks[i], spec, static_cast<int>(i));
        std::vector<Patch> others;
        others.reserve(masks.size() - 1);
        for (std::size_t j = 0; j < masks.size(); ++j) {
          if (j == i) continue;
          others.push_back(crop(image, masks[j], spec, static_cast<int>(j)));
        }
        ctx = build_calibration_context(*backends.captioner, std::move(target),
                                        std::move(others));
      } catch (const Error& e) {
        std::cerr << "warn: patch setup failed for image " << image.id
                  << " mask " << i << ": " << e.what() << "\n";
        result.failures += static_cast<std::int64_t>(config.decoding_configs.size());
        continue;
      }
      for (std::size_t d = 0; d < config.decoding_configs.size(); ++d) {
        CounterRng rng(candidate_key(config.seed, image.id, i, c, d));
        try {
          CaptionCandidate cand;
          cand.tokens =
              decode(*backends.captioner, ctx, config.decoding_configs[d], rng);
          cand.text = sequence_text(cand.tokens, backends.captioner->vocabulary());
          cand.mask_index = static_cast<int>(i);
          cand.crop_spec = spec;
          cand.decoding_config_index = static_cast<int>(d);
          result.candidates.push_back(std::move(cand));
        } catch (const Error& e) {
          std::cerr << "warn: candidate (" << image.id << ", mask " << i
                    << ", crop " << c << ", config " << d
                    << ") failed: " << e.what() << "\n";
          ++result.failures;
        }
      }
    }
  }
  return result;
}

void score_candidates(std::vector<CaptionCandidate>& candidates,
                      const std::vector<BinaryMask>& masks, const Image& image,
                      const PipelineBackends& backends) {
  if (!backends.scorer) throw StateError("score_candidates: no scorer");
  if (candidates.empty()) return;

  std::vector<Patch> theta_patches;
  std::vector<Patch> cos_patches;
  theta_patches.reserve(masks.size());
  cos_patches.reserve(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    theta_patches.push_back(
        crop(image, masks[i], kThetaCropSpec, static_cast<int>(i)));
    cos_patches.push_back(
        crop(image, masks[i], kCorrectnessCropSpec, static_cast<int>(i)));
  }

  for (auto& cand : candidates) {
    const std::size_t i = static_cast<std::size_t>(cand.mask_index);
    if (i >= masks.size()) throw StateError("score_candidates: bad mask index");

    const bool empty_text = cand.text.empty();
    auto theta = [&](std::size_t m) {
      return std::max(backends.scorer->score(theta_patches[m], cand.text),
                      kScoreFloor);
    };
    // An empty caption has no noun phrase; its scores sit at the floor.
    auto correctness = [&](std::size_t m) {
      if (empty_text) return kScoreFloor;
      return cos_score(*backends.scorer, cos_patches[m], cand.text);
    };

    cand.theta_target = theta(i);
    cand.cos = correctness(i);
    cand.theta_others.clear();
    std::vector<double> cos_others;
    for (std::size_t j = 0; j < masks.size(); ++j) {
      if (j == i) continue;
      cand.theta_others.push_back(theta(j));
      cos_others.push_back(correctness(j));
    }
    cand.uos = uos(cand.theta_target, cand.theta_others);
    cand.dos = dos(cand.cos, cand.theta_target, cos_others, cand.theta_others);
    cand.scored = true;
  }
}

std::vector<PseudoAnnotation> group_and_filter(
    const std::vector<CaptionCandidate>& candidates,
    const std::vector<BinaryMask>& masks, const Image& image,
    const std::string& file_name, const FilterConfig& filter) {
  std::vector<std::vector<const CaptionCandidate*>> by_mask(masks.size());
  for (const auto& c : candidates) {
    by_mask.at(static_cast<std::size_t>(c.mask_index)).push_back(&c);
  }
  std::vector<PseudoAnnotation> annotations;
  annotations.reserve(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    PseudoAnnotation ann;
    ann.image_id = image.id;
    ann.file_name = file_name;
    ann.mask_index = static_cast<int>(i);
    ann.mask = rle_encode(masks[i]);
    for (const CaptionCandidate* c : by_mask[i]) {
      if (metric_value(*c, filter.metric) < filter.tau) continue;
      ScoredCaption sc;
      sc.text = c->text;
      sc.uos = c->uos;
      sc.cos = c->cos;
      sc.dos = c->dos;
      sc.crop = c->crop_spec;
      sc.decoder_index = c->decoding_config_index;
      ann.captions.push_back(std::move(sc));
    }
    annotations.push_back(std::move(ann));
  }
  return annotations;
}

std::vector<PseudoAnnotation> score_and_filter(
    std::vector<CaptionCandidate>& candidates,
    const std::vector<BinaryMask>& masks, const Image& image,
    const std::string& file_name, const PipelineBackends& backends,
    const PipelineConfig& config) {
  score_candidates(candidates, masks, image, backends);
  return group_and_filter(candidates, masks, image, file_name, config.filter);
}

std::vector<PseudoAnnotation> refilter_dump(const CandidateDump& dump,
                                            const FilterConfig& filter) {
  filter.validate();
  std::vector<PseudoAnnotation> annotations;
  for (const auto& image : dump.images) {
    for (const auto& mask : image.masks) {
      PseudoAnnotation ann;
      ann.image_id = image.image_id;
      ann.file_name = image.file_name;
      ann.mask_index = mask.mask_index;
      ann.mask = mask.mask;
      for (const auto& c : filter_candidates(mask.candidates, filter)) {
        ann.captions.push_back({c.text, c.uos, c.cos, c.dos, c.crop_spec,
                                c.decoding_config_index});
      }
      annotations.push_back(std::move(ann));
    }
  }
  std::sort(annotations.begin(), annotations.end(),
            [](const PseudoAnnotation& a, const PseudoAnnotation& b) {
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              return a.mask_index < b.mask_index;
            });
  return annotations;
}

std::pair<std::vector<PseudoAnnotation>, CorpusStats> run_pipeline(
    const ImageSource& source, const PipelineBackends& backends,
    const PipelineConfig& config, CandidateDump* dump_out) {
  config.validate();
  std::vector<PseudoAnnotation> annotations;
  CorpusStats stats;

  for (std::size_t idx = 0; idx < source.size(); ++idx) {
    ImageRecord record;
    try {
      record = source.load(idx);
    } catch (const Error& e) {
      std::cerr << "warn: skipping input " << idx << ": " << e.what() << "\n";
      ++stats.n_images_skipped;
      continue;
    }

    std::vector<BinaryMask> masks;
    if (record.has_file_masks) {
      masks = std::move(record.file_masks);
    } else {
      if (!backends.mask_extractor) {
        throw StateError("run_pipeline: mask extractor required but missing");
      }
      masks = backends.mask_extractor->extract(record.image);
    }
    if (!record.coarse_masks.empty()) {
      masks = reduce_masks(masks, record.coarse_masks);
    }
    std::erase_if(masks, [](const BinaryMask& m) { return m.area < 1; });

    ++stats.n_images;
    stats.n_masks += static_cast<std::int64_t>(masks.size());
    if (masks.empty()) continue;

    auto generated = generate_candidates(record.image, masks, backends, config);
    stats.n_candidates += static_cast<std::int64_t>(generated.candidates.size());
    auto anns = score_and_filter(generated.candidates, masks, record.image,
                                 record.file_name, backends, config);
    for (auto& a : anns) {
      stats.n_kept += static_cast<std::int64_t>(a.captions.size());
      annotations.push_back(std::move(a));
    }

    if (dump_out) {
      DumpImageRecord rec;
      rec.image_id = record.image.id;
      rec.file_name = record.file_name;
      for (std::size_t i = 0; i < masks.size(); ++i) {
        DumpMaskRecord mr;
        mr.mask_index = static_cast<int>(i);
        mr.mask = rle_encode(masks[i]);
        rec.masks.push_back(std::move(mr));
      }
      for (auto& c : generated.candidates) {
        rec.masks.at(static_cast<std::size_t>(c.mask_index))
            .candidates.push_back(std::move(c));
      }
      dump_out->images.push_back(std::move(rec));
    }
  }

  std::sort(annotations.begin(), annotations.end(),
            [](const PseudoAnnotation& a, const PseudoAnnotation& b) {
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              return a.mask_index < b.mask_index;
            });
  if (dump_out) {
    std::sort(dump_out->images.begin(), dump_out->images.end(),
              [](const DumpImageRecord& a, const DumpImageRecord& b) {
                return a.image_id < b.image_id;
              });
  }
  stats.vocabulary_size = caption_vocabulary_size(annotations);
  return {std::move(annotations), stats};
}

}  // namespace pseudoris
