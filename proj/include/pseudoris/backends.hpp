#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pseudoris/maskops.hpp"
#include "pseudoris/types.hpp"

namespace pseudoris {

// Minimum value any scorer may return. Scores feed ratio metrics, so
// adapters clamp raw similarities up to this floor.
inline constexpr double kScoreFloor = 1e-6;

// Autoregressive captioning model. Implementations must be deterministic:
// identical (patch, prefix) inputs yield identical outputs.
class CaptionerBackend {
 public:
  virtual ~CaptionerBackend() = default;

  virtual const Vocabulary& vocabulary() const = 0;

  // Unit-norm embedding of a patch from the model's visual encoder.
  virtual VisualEmbedding embed(const Patch& patch) const = 0;

  // Next-word distribution conditioned on the patch and the prefix decoded
  // so far (prefix excludes bos).
  virtual WordDistribution next_word_dist(const Patch& patch,
                                          const TokenSequence& prefix) const = 0;
};

// Image-text similarity model. score() is deterministic and never returns
// less than kScoreFloor.
class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;

  virtual double score(const Patch& patch, const std::string& text) const = 0;
};

// Produces candidate segmentation masks for an image.
class MaskExtractorBackend {
 public:
  virtual ~MaskExtractorBackend() = default;

  virtual std::vector<BinaryMask> extract(const Image& image) const = 0;
};

enum class BackendKind { captioner, scorer, mask_extractor };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& s);

struct RegistrationHandle {
  BackendKind kind;
  std::string name;
};

// Name-indexed registry for the three backend roles. Factories run once; the
// produced instance is cached so repeated resolves observe the same object.
// Backends registered `exclusive` are not safe for concurrent use and the
// pipeline serializes calls to them.
class BackendRegistry {
 public:
  template <typename Backend>
  using Factory = std::function<std::shared_ptr<Backend>()>;

  RegistrationHandle register_captioner(const std::string& name,
                                        Factory<CaptionerBackend> factory,
                                        bool exclusive = false);
  RegistrationHandle register_scorer(const std::string& name,
                                     Factory<ScorerBackend> factory,
                                     bool exclusive = false);
  RegistrationHandle register_mask_extractor(const std::string& name,
                                             Factory<MaskExtractorBackend> factory,
                                             bool exclusive = false);

  std::shared_ptr<CaptionerBackend> resolve_captioner(const std::string& name) const;
  std::shared_ptr<ScorerBackend> resolve_scorer(const std::string& name) const;
  std::shared_ptr<MaskExtractorBackend> resolve_mask_extractor(
      const std::string& name) const;

  // Registered names for a kind, lexicographically sorted.
  std::vector<std::string> names(BackendKind kind) const;

  bool is_exclusive(BackendKind kind, const std::string& name) const;

 private:
  template <typename Backend>
  struct Entry {
    Factory<Backend> factory;
    bool exclusive = false;
    mutable std::shared_ptr<Backend> instance;
  };

  template <typename Backend>
  static RegistrationHandle add(std::map<std::string, Entry<Backend>>& table,
                                BackendKind kind, const std::string& name,
                                Factory<Backend> factory, bool exclusive);

  template <typename Backend>
  static std::shared_ptr<Backend> get(
      const std::map<std::string, Entry<Backend>>& table, BackendKind kind,
      const std::string& name);

  std::map<std::string, Entry<CaptionerBackend>> captioners_;
  std::map<std::string, Entry<ScorerBackend>> scorers_;
  std::map<std::string, Entry<MaskExtractorBackend>> extractors_;
};

// Process-wide registry used by the CLI; tests may build their own.
BackendRegistry& default_registry();

}  // namespace pseudoris
