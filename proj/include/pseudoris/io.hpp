#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pseudoris/pipeline.hpp"
#include "pseudoris/synthworld.hpp"

namespace pseudoris {

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Byte-stable serialization helpers. Output files sort keys, print floats
// with six decimals, serialize infinities as the string "inf", and end with
// a trailing newline.

std::string fixed6(double v);
std::string json_escape(const std::string& s);
std::string hex64(std::uint64_t v);

// ---------------------------------------------------------------------------
// Flat `key = value` config files.

using FlatConfig = std::map<std::string, std::string>;

FlatConfig parse_flat_config(const std::string& text);
FlatConfig read_flat_config(const std::filesystem::path& path);
std::string serialize_flat_config(const FlatConfig& config);

// Grid DSL: comma-separated entries "beam:5", "greedy", "topk:7", "topp:0.4",
// "topk_naive:7", "topp_naive:0.4". Distinctive entries take `temperature`
// and `calibration`; all entries take `max_len`.
std::vector<DecodingConfig> parse_decoding_grid(const std::string& dsl,
                                                double temperature, int max_len,
                                                CalibrationMode mode);
std::string serialize_decoding_grid(const std::vector<DecodingConfig>& grid);

// Crops DSL: comma-separated margins, "m" suffix for the masked variant,
// e.g. "0.0,0.1,0.2,0.0m".
std::vector<CropSpec> parse_crop_specs(const std::string& dsl);
std::string serialize_crop_specs(const std::vector<CropSpec>& specs);

PipelineConfig pipeline_config_from_flat(const FlatConfig& flat);
FlatConfig pipeline_config_to_flat(const PipelineConfig& config);

// FNV-1a of the canonical flat form, as 16 hex chars.
std::string config_digest(const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Images: binary PPM (P6), the only raster format the tool reads or writes.

void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Mask files: {"masks": [rle...]} with an optional "coarse" list that
// triggers mask reduction. Same RLE record schema as annotation output.

struct MaskFile {
  std::vector<BinaryMask> masks;
  std::vector<BinaryMask> coarse;
};

void write_mask_file(const std::filesystem::path& path, const MaskFile& file);
MaskFile read_mask_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Annotations, candidate dumps, stats, manifests, benchmark records.

void write_annotations(const std::filesystem::path& path,
                       const std::vector<PseudoAnnotation>& annotations,
                       const std::string& digest);

struct AnnotationsFile {
  std::string version;
  std::string config_digest;
  std::vector<PseudoAnnotation> annotations;
};

AnnotationsFile read_annotations(const std::filesystem::path& path);

void write_dump(const std::filesystem::path& path, const CandidateDump& dump);
CandidateDump read_dump(const std::filesystem::path& path);

void write_stats(const std::filesystem::path& path, const CorpusStats& stats);

struct RunManifest {
  std::string version = kToolVersion;
  FlatConfig config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_checksums;
  std::string timestamp;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

std::string file_checksum_hex(const std::filesystem::path& path);
std::string iso8601_utc_now();

std::string benchmark_table(const synth::BenchmarkReport& report);
void write_benchmark_record(const std::filesystem::path& path,
                            const synth::BenchmarkReport& report);

// Writes via a temp file in the same directory, then renames into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// ---------------------------------------------------------------------------
// Directory-backed image source: all *.ppm files in lexicographic order.
// When `use_file_masks` is set, each image must have "<stem>.masks.json"
// next to it; otherwise that file, when present, may still supply a coarse
// set for reduction.

class DirectoryImageSource : public ImageSource {
 public:
  DirectoryImageSource(std::filesystem::path dir, bool use_file_masks);

  std::size_t size() const override { return paths_.size(); }
  ImageRecord load(std::size_t index) const override;

  const std::vector<std::filesystem::path>& image_paths() const { return paths_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> paths_;
  bool use_file_masks_;
};

}  // namespace pseudoris
