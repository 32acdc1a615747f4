#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pseudoris/backends.hpp"
#include "pseudoris/decoding.hpp"
#include "pseudoris/scoring.hpp"

namespace pseudoris {

// Crop geometry used for the theta scores of every mask (uniqueness side),
// and for the correctness score (masked, tight crop).
inline constexpr CropSpec kThetaCropSpec{0.1, false};
inline constexpr CropSpec kCorrectnessCropSpec{0.0, true};

// Full run configuration. The defaults reproduce the stock candidate grid:
// 4 crops x 11 decoders = 44 candidates per mask, filtered on
// distinctiveness at tau = 1.3.
struct PipelineConfig {
  std::vector<CropSpec> crop_specs = canonical_crop_specs();
  std::vector<DecodingConfig> decoding_configs = default_decoding_grid();
  FilterConfig filter;
  std::uint64_t seed = 0;
  std::string captioner = "synth";
  std::string scorer = "synth";
  std::string mask_source = "synth";  // extractor backend name, or "file"

  void validate() const;
  int candidates_per_mask() const {
    return static_cast<int>(crop_specs.size() * decoding_configs.size());
  }
};

// Caption that survived filtering, as exported.
struct ScoredCaption {
  std::string text;
  double uos = 0.0;
  double cos = 0.0;
  double dos = 0.0;
  CropSpec crop;
  int decoder_index = -1;
};

// One mask with its surviving captions. Masks are retained even when
// filtering removed every caption, so downstream consumers can audit how
// aggressive the threshold was.
struct PseudoAnnotation {
  std::string image_id;
  std::string file_name;
  int mask_index = -1;
  Rle mask;
  std::vector<ScoredCaption> captions;
};

struct CorpusStats {
  std::int64_t n_images = 0;
  std::int64_t n_images_skipped = 0;
  std::int64_t n_masks = 0;
  std::int64_t n_candidates = 0;
  std::int64_t n_kept = 0;
  std::int64_t vocabulary_size = 0;
};

// Unique whitespace-separated lowercased tokens across kept captions.
std::int64_t caption_vocabulary_size(const std::vector<PseudoAnnotation>& annotations);

struct PipelineBackends {
  std::shared_ptr<CaptionerBackend> captioner;
  std::shared_ptr<ScorerBackend> scorer;
  std::shared_ptr<MaskExtractorBackend> mask_extractor;  // null when masks come from files
};

PipelineBackends resolve_pipeline_backends(BackendRegistry& registry,
                                           const PipelineConfig& config);

// One input image with its mask sources. When `coarse_masks` is nonempty the
// fine set is reduced against it before captioning.
struct ImageRecord {
  Image image;
  std::string file_name;
  bool has_file_masks = false;
  std::vector<BinaryMask> file_masks;
  std::vector<BinaryMask> coarse_masks;
};

class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual std::size_t size() const = 0;
  virtual ImageRecord load(std::size_t index) const = 0;
};

struct CandidateGenerationResult {
  std::vector<CaptionCandidate> candidates;
  std::int64_t failures = 0;  // backend errors, skipped per candidate
};

// Produces one candidate per (mask, crop spec, decoding config). Candidate
// RNG streams are keyed on (seed, image id, mask, crop, config), so results
// do not depend on evaluation order. The masked crop participates in
// captioning like the others.
CandidateGenerationResult generate_candidates(const Image& image,
                                              const std::vector<BinaryMask>& masks,
                                              const PipelineBackends& backends,
                                              const PipelineConfig& config);

// Fills theta/uos/cos/dos on every candidate. Theta uses the 10% unmasked
// crop of each mask; correctness uses the tight masked crop and the
// caption's noun phrase.
void score_candidates(std::vector<CaptionCandidate>& candidates,
                      const std::vector<BinaryMask>& masks, const Image& image,
                      const PipelineBackends& backends);

// Groups scored candidates by mask, applies the filter, and emits one
// annotation per mask in mask order.
std::vector<PseudoAnnotation> group_and_filter(
    const std::vector<CaptionCandidate>& candidates,
    const std::vector<BinaryMask>& masks, const Image& image,
    const std::string& file_name, const FilterConfig& filter);

// score_candidates + group_and_filter.
std::vector<PseudoAnnotation> score_and_filter(
    std::vector<CaptionCandidate>& candidates,
    const std::vector<BinaryMask>& masks, const Image& image,
    const std::string& file_name, const PipelineBackends& backends,
    const PipelineConfig& config);

// Every scored candidate of a run, grouped by image and mask. Serialized as
// the candidate dump so a corpus can be re-filtered at a new threshold or
// metric without regenerating captions.
struct DumpMaskRecord {
  int mask_index = -1;
  Rle mask;
  std::vector<CaptionCandidate> candidates;
};

struct DumpImageRecord {
  std::string image_id;
  std::string file_name;
  std::vector<DumpMaskRecord> masks;
};

struct CandidateDump {
  std::string config_digest;
  std::vector<DumpImageRecord> images;
};

// Applies a filter to an existing dump. Candidates must carry scores.
std::vector<PseudoAnnotation> refilter_dump(const CandidateDump& dump,
                                            const FilterConfig& filter);

// End-to-end: masks -> candidates -> scores -> filtered annotations, with
// aggregate stats. Unreadable images are logged to stderr, skipped, and
// counted. Output is sorted by (image_id, mask index). When `dump_out` is
// given it receives every scored candidate.
std::pair<std::vector<PseudoAnnotation>, CorpusStats> run_pipeline(
    const ImageSource& source, const PipelineBackends& backends,
    const PipelineConfig& config, CandidateDump* dump_out = nullptr);

}  // namespace pseudoris
