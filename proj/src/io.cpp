#include "pseudoris/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace pseudoris {

using nlohmann::json;

std::string fixed6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::string quoted(const std::string& s) { return '"' + json_escape(s) + '"'; }

// Score fields round-trip through text as %.6f, with infinities as "inf".
std::string score_json(double v) {
  if (std::isinf(v)) return quoted(v > 0 ? "inf" : "-inf");
  return fixed6(v);
}

double score_from_json(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("unexpected score string '" + s + "'");
  }
  if (v.is_number()) return v.get<double>();
  throw DataError("score field is neither number nor \"inf\"");
}

std::string rle_json(const Rle& rle) {
  std::ostringstream out;
  out << "{\"counts\":[";
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    if (i) out << ',';
    out << rle.counts[i];
  }
  out << "],\"size\":[" << rle.height << ',' << rle.width << "]}";
  return out.str();
}

Rle rle_from_json(const json& j) {
  Rle rle;
  const auto& size = j.at("size");
  rle.height = size.at(0).get<int>();
  rle.width = size.at(1).get<int>();
  for (const auto& c : j.at("counts")) {
    rle.counts.push_back(c.get<std::int64_t>());
  }
  return rle;
}

std::string crop_json(const CropSpec& spec) {
  std::ostringstream out;
  out << "{\"margin\":" << fixed6(spec.margin)
      << ",\"masked\":" << (spec.masked ? "true" : "false") << '}';
  return out.str();
}

CropSpec crop_from_json(const json& j) {
  CropSpec spec;
  spec.margin = j.at("margin").get<double>();
  spec.masked = j.at("masked").get<bool>();
  return spec;
}

std::string caption_json(const std::string& text, double uos_v, double cos_v,
                         double dos_v, const CropSpec& crop, int decoder) {
  std::ostringstream out;
  out << "{\"cos\":" << score_json(cos_v) << ",\"crop\":" << crop_json(crop)
      << ",\"decoder\":" << decoder << ",\"dos\":" << score_json(dos_v)
      << ",\"text\":" << quoted(text) << ",\"uos\":" << score_json(uos_v) << '}';
  return out.str();
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("cannot parse " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Flat config

FlatConfig parse_flat_config(const std::string& text) {
  FlatConfig out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string{};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

FlatConfig read_flat_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_flat_config(buf.str());
}

std::string serialize_flat_config(const FlatConfig& config) {
  std::ostringstream out;
  for (const auto& [k, v] : config) out << k << " = " << v << '\n';
  return out.str();
}

std::vector<DecodingConfig> parse_decoding_grid(const std::string& dsl,
                                                double temperature, int max_len,
                                                CalibrationMode mode) {
  std::vector<DecodingConfig> grid;
  std::istringstream in(dsl);
  std::string entry;
  while (std::getline(in, entry, ',')) {
    if (entry.empty()) continue;
    const auto colon = entry.find(':');
    const std::string name = entry.substr(0, colon);
    const std::string param =
        colon == std::string::npos ? "" : entry.substr(colon + 1);
    DecodingConfig c;
    c.strategy = strategy_from_string(name);
    c.max_len = max_len;
    c.calibration_mode = mode;
    try {
      switch (c.strategy) {
        case Strategy::greedy:
          break;
        case Strategy::beam:
          c.beam_width = std::stoi(param);
          break;
        case Strategy::topk_naive:
        case Strategy::topk_distinctive:
          c.k = std::stoi(param);
          break;
        case Strategy::topp_naive:
        case Strategy::topp_distinctive:
          c.p = std::stod(param);
          break;
      }
    } catch (const std::exception&) {
      throw ConfigError("bad grid entry '" + entry + "'");
    }
    if (c.distinctive()) c.temperature = temperature;
    c.validate();
    grid.push_back(c);
  }
  if (grid.empty()) throw ConfigError("decoding grid is empty");
  return grid;
}

std::string serialize_decoding_grid(const std::vector<DecodingConfig>& grid) {
  std::ostringstream out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) out << ',';
    const auto& c = grid[i];
    out << to_string(c.strategy);
    switch (c.strategy) {
      case Strategy::greedy: break;
      case Strategy::beam: out << ':' << c.beam_width; break;
      case Strategy::topk_naive:
      case Strategy::topk_distinctive: out << ':' << c.k; break;
      case Strategy::topp_naive:
      case Strategy::topp_distinctive: out << ':' << fixed6(c.p); break;
    }
  }
  return out.str();
}

std::vector<CropSpec> parse_crop_specs(const std::string& dsl) {
  std::vector<CropSpec> specs;
  std::istringstream in(dsl);
  std::string entry;
  while (std::getline(in, entry, ',')) {
    if (entry.empty()) continue;
    CropSpec spec;
    std::string number = entry;
    if (number.back() == 'm') {
      spec.masked = true;
      number.pop_back();
    }
    try {
      spec.margin = std::stod(number);
    } catch (const std::exception&) {
      throw ConfigError("bad crop entry '" + entry + "'");
    }
    if (spec.margin < 0.0) throw ConfigError("crop margin must be >= 0");
    specs.push_back(spec);
  }
  if (specs.empty()) throw ConfigError("crop spec list is empty");
  return specs;
}

std::string serialize_crop_specs(const std::vector<CropSpec>& specs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i) out << ',';
    out << fixed6(specs[i].margin);
    if (specs[i].masked) out << 'm';
  }
  return out.str();
}

PipelineConfig pipeline_config_from_flat(const FlatConfig& flat) {
  static const std::vector<std::string> known = {
      "backends.captioner", "backends.scorer",  "backends.mask_source",
      "decoding.calibration", "decoding.grid",  "decoding.max_len",
      "decoding.temperature", "filter.metric",  "filter.tau",
      "pipeline.crops",       "pipeline.seed",
  };
  for (const auto& [k, _] : flat) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = flat.find(key);
    return it == flat.end() ? nullptr : &it->second;
  };

  PipelineConfig cfg;
  try {
    if (const auto* v = get("backends.captioner")) cfg.captioner = *v;
    if (const auto* v = get("backends.scorer")) cfg.scorer = *v;
    if (const auto* v = get("backends.mask_source")) cfg.mask_source = *v;
    if (const auto* v = get("pipeline.seed")) cfg.seed = std::stoull(*v);
    if (const auto* v = get("filter.tau")) cfg.filter.tau = std::stod(*v);
    if (const auto* v = get("filter.metric")) {
      cfg.filter.metric = filter_metric_from_string(*v);
    }
    if (const auto* v = get("pipeline.crops")) {
      cfg.crop_specs = parse_crop_specs(*v);
    }
    double temperature = kDefaultGridTemperature;
    int max_len = 32;
    CalibrationMode mode = CalibrationMode::average;
    if (const auto* v = get("decoding.temperature")) temperature = std::stod(*v);
    if (const auto* v = get("decoding.max_len")) max_len = std::stoi(*v);
    if (const auto* v = get("decoding.calibration")) {
      mode = calibration_mode_from_string(*v);
    }
    const auto* grid = get("decoding.grid");
    cfg.decoding_configs = parse_decoding_grid(
        grid ? *grid : serialize_decoding_grid(default_decoding_grid()),
        temperature, max_len, mode);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

FlatConfig pipeline_config_to_flat(const PipelineConfig& config) {
  FlatConfig flat;
  flat["backends.captioner"] = config.captioner;
  flat["backends.scorer"] = config.scorer;
  flat["backends.mask_source"] = config.mask_source;
  flat["pipeline.seed"] = std::to_string(config.seed);
  flat["pipeline.crops"] = serialize_crop_specs(config.crop_specs);
  flat["filter.metric"] = to_string(config.filter.metric);
  flat["filter.tau"] = fixed6(config.filter.tau);
  flat["decoding.grid"] = serialize_decoding_grid(config.decoding_configs);

  double temperature = kDefaultGridTemperature;
  int max_len = 32;
  CalibrationMode mode = CalibrationMode::average;
  for (const auto& c : config.decoding_configs) {
    max_len = c.max_len;
    if (c.distinctive()) {
      temperature = c.temperature;
      mode = c.calibration_mode;
      break;
    }
  }
  flat["decoding.temperature"] = fixed6(temperature);
  flat["decoding.max_len"] = std::to_string(max_len);
  flat["decoding.calibration"] = to_string(mode);
  return flat;
}

std::string config_digest(const PipelineConfig& config) {
  return hex64(fnv1a(serialize_flat_config(pipeline_config_to_flat(config))));
}

// ---------------------------------------------------------------------------
// PPM

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::string data;
  data.reserve(static_cast<std::size_t>(image.width) * image.height * 3 + 32);
  data += "P6\n" + std::to_string(image.width) + " " +
          std::to_string(image.height) + "\n255\n";
  for (int row = 0; row < image.height; ++row) {
    for (int col = 0; col < image.width; ++col) {
      for (int ch = 0; ch < 3; ++ch) {
        data += static_cast<char>(image.channels[ch](row, col));
      }
    }
  }
  atomic_write(path, data);
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());

  auto next_token = [&in, &path]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw DataError("truncated PPM header in " + path.string());
  };

  if (next_token() != "P6") throw DataError(path.string() + " is not binary PPM");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw DataError("bad PPM header in " + path.string());
  }
  if (width < 1 || height < 1 || maxval != 255) {
    throw DataError("unsupported PPM geometry in " + path.string());
  }
  in.get();  // single whitespace after maxval

  Image img = Image::blank(path.stem().string(), width, height);
  std::vector<char> row(static_cast<std::size_t>(width) * 3);
  for (int r = 0; r < height; ++r) {
    if (!in.read(row.data(), static_cast<std::streamsize>(row.size()))) {
      throw DataError("truncated PPM pixel data in " + path.string());
    }
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        img.channels[ch](r, c) =
            static_cast<std::uint8_t>(row[static_cast<std::size_t>(c) * 3 + ch]);
      }
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Mask files

void write_mask_file(const std::filesystem::path& path, const MaskFile& file) {
  std::ostringstream out;
  out << '{';
  if (!file.coarse.empty()) {
    out << "\"coarse\":[";
    for (std::size_t i = 0; i < file.coarse.size(); ++i) {
      if (i) out << ',';
      out << rle_json(rle_encode(file.coarse[i]));
    }
    out << "],";
  }
  out << "\"masks\":[";
  for (std::size_t i = 0; i < file.masks.size(); ++i) {
    if (i) out << ',';
    out << rle_json(rle_encode(file.masks[i]));
  }
  out << "]}\n";
  atomic_write(path, out.str());
}

MaskFile read_mask_file(const std::filesystem::path& path) {
  const json j = parse_file(path);
  MaskFile file;
  for (const auto& m : j.at("masks")) {
    file.masks.push_back(rle_decode(rle_from_json(m)));
  }
  if (j.contains("coarse")) {
    for (const auto& m : j.at("coarse")) {
      file.coarse.push_back(rle_decode(rle_from_json(m)));
    }
  }
  return file;
}

// ---------------------------------------------------------------------------
// Annotations

void write_annotations(const std::filesystem::path& path,
                       const std::vector<PseudoAnnotation>& annotations,
                       const std::string& digest) {
  std::ostringstream out;
  out << "{\"annotations\":[";
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& ann = annotations[i];
    if (i) out << ',';
    out << "{\"captions\":[";
    for (std::size_t c = 0; c < ann.captions.size(); ++c) {
      const auto& cap = ann.captions[c];
      if (c) out << ',';
      out << caption_json(cap.text, cap.uos, cap.cos, cap.dos, cap.crop,
                          cap.decoder_index);
    }
    out << "],\"file_name\":" << quoted(ann.file_name)
        << ",\"image_id\":" << quoted(ann.image_id)
        << ",\"mask\":" << rle_json(ann.mask) << '}';
  }
  out << "],\"config_digest\":" << quoted(digest)
      << ",\"version\":" << quoted(kToolVersion) << "}\n";
  atomic_write(path, out.str());
}

AnnotationsFile read_annotations(const std::filesystem::path& path) {
  const json j = parse_file(path);
  AnnotationsFile file;
  file.version = j.value("version", "");
  file.config_digest = j.value("config_digest", "");
  std::map<std::string, int> next_index;
  for (const auto& a : j.at("annotations")) {
    PseudoAnnotation ann;
    ann.image_id = a.at("image_id").get<std::string>();
    ann.file_name = a.value("file_name", "");
    ann.mask = rle_from_json(a.at("mask"));
    ann.mask_index = next_index[ann.image_id]++;
    for (const auto& c : a.at("captions")) {
      ScoredCaption cap;
      cap.text = c.at("text").get<std::string>();
      cap.uos = score_from_json(c.at("uos"));
      cap.cos = score_from_json(c.at("cos"));
      cap.dos = score_from_json(c.at("dos"));
      cap.crop = crop_from_json(c.at("crop"));
      cap.decoder_index = c.at("decoder").get<int>();
      ann.captions.push_back(std::move(cap));
    }
    file.annotations.push_back(std::move(ann));
  }
  return file;
}

// ---------------------------------------------------------------------------
// Candidate dumps

void write_dump(const std::filesystem::path& path, const CandidateDump& dump) {
  std::ostringstream out;
  out << "{\"config_digest\":" << quoted(dump.config_digest) << ",\"images\":[";
  for (std::size_t i = 0; i < dump.images.size(); ++i) {
    const auto& img = dump.images[i];
    if (i) out << ',';
    out << "{\"file_name\":" << quoted(img.file_name)
        << ",\"image_id\":" << quoted(img.image_id) << ",\"masks\":[";
    for (std::size_t m = 0; m < img.masks.size(); ++m) {
      const auto& mask = img.masks[m];
      if (m) out << ',';
      out << "{\"candidates\":[";
      for (std::size_t c = 0; c < mask.candidates.size(); ++c) {
        const auto& cand = mask.candidates[c];
        if (c) out << ',';
        out << caption_json(cand.text, cand.uos, cand.cos, cand.dos,
                            cand.crop_spec, cand.decoding_config_index);
      }
      out << "],\"mask\":" << rle_json(mask.mask)
          << ",\"mask_index\":" << mask.mask_index << '}';
    }
    out << "]}";
  }
  out << "],\"version\":" << quoted(kToolVersion) << "}\n";
  atomic_write(path, out.str());
}

CandidateDump read_dump(const std::filesystem::path& path) {
  const json j = parse_file(path);
  CandidateDump dump;
  dump.config_digest = j.value("config_digest", "");
  if (!j.contains("images")) throw ConfigError("dump has no image records");
  for (const auto& img : j.at("images")) {
    DumpImageRecord rec;
    rec.image_id = img.at("image_id").get<std::string>();
    rec.file_name = img.value("file_name", "");
    for (const auto& m : img.at("masks")) {
      DumpMaskRecord mr;
      mr.mask_index = m.at("mask_index").get<int>();
      mr.mask = rle_from_json(m.at("mask"));
      for (const auto& c : m.at("candidates")) {
        CaptionCandidate cand;
        cand.mask_index = mr.mask_index;
        cand.text = c.at("text").get<std::string>();
        if (!c.contains("uos") || !c.contains("cos") || !c.contains("dos")) {
          throw ConfigError("dump candidate is missing raw scores");
        }
        cand.uos = score_from_json(c.at("uos"));
        cand.cos = score_from_json(c.at("cos"));
        cand.dos = score_from_json(c.at("dos"));
        cand.crop_spec = crop_from_json(c.at("crop"));
        cand.decoding_config_index = c.at("decoder").get<int>();
        cand.scored = true;
        mr.candidates.push_back(std::move(cand));
      }
      rec.masks.push_back(std::move(mr));
    }
    dump.images.push_back(std::move(rec));
  }
  return dump;
}

// ---------------------------------------------------------------------------
// Stats, manifests, benchmark records

void write_stats(const std::filesystem::path& path, const CorpusStats& stats) {
  std::ostringstream out;
  out << "{\"n_candidates\":" << stats.n_candidates
      << ",\"n_images\":" << stats.n_images
      << ",\"n_images_skipped\":" << stats.n_images_skipped
      << ",\"n_kept\":" << stats.n_kept << ",\"n_masks\":" << stats.n_masks
      << ",\"vocabulary_size\":" << stats.vocabulary_size << "}\n";
  atomic_write(path, out.str());
}

void write_manifest(const std::filesystem::path& path,
                    const RunManifest& manifest) {
  std::ostringstream out;
  out << "{\"config\":{";
  bool first = true;
  for (const auto& [k, v] : manifest.config) {
    if (!first) out << ',';
    first = false;
    out << quoted(k) << ':' << quoted(v);
  }
  out << "},\"input_checksums\":{";
  first = true;
  for (const auto& [k, v] : manifest.input_checksums) {
    if (!first) out << ',';
    first = false;
    out << quoted(k) << ':' << quoted(v);
  }
  out << "},\"seed\":" << manifest.seed
      << ",\"timestamp\":" << quoted(manifest.timestamp)
      << ",\"version\":" << quoted(manifest.version) << "}\n";
  atomic_write(path, out.str());
}

std::string file_checksum_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot checksum " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a(buf.str()));
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string benchmark_table(const synth::BenchmarkReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-20s %11s %11s %11s %9s %9s\n", "variant",
                "uniqueness", "mean_dos", "kept_frac", "kept", "total");
  out << line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof(line), "%-20s %11s %11s %11s %9lld %9lld\n",
                  row.name.c_str(), fixed6(row.uniqueness).c_str(),
                  fixed6(row.mean_dos).c_str(), fixed6(row.kept_fraction).c_str(),
                  static_cast<long long>(row.kept),
                  static_cast<long long>(row.total));
    out << line;
  }
  return out.str();
}

void write_benchmark_record(const std::filesystem::path& path,
                            const synth::BenchmarkReport& report) {
  std::ostringstream out;
  out << "{\"config\":{\"n_objects\":" << report.config.n_objects
      << ",\"n_scenes\":" << report.config.n_scenes
      << ",\"overlap\":" << fixed6(report.config.overlap)
      << ",\"seed\":" << report.config.seed << "},\"rows\":[";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    if (i) out << ',';
    out << "{\"kept\":" << row.kept
        << ",\"kept_fraction\":" << score_json(row.kept_fraction)
        << ",\"mean_dos\":" << score_json(row.mean_dos)
        << ",\"name\":" << quoted(row.name) << ",\"total\":" << row.total
        << ",\"uniqueness_rate\":" << score_json(row.uniqueness) << '}';
  }
  out << "],\"version\":" << quoted(kToolVersion) << "}\n";
  atomic_write(path, out.str());
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Directory source

DirectoryImageSource::DirectoryImageSource(std::filesystem::path dir,
                                           bool use_file_masks)
    : dir_(std::move(dir)), use_file_masks_(use_file_masks) {
  if (!std::filesystem::is_directory(dir_)) {
    throw ConfigError("image directory not found: " + dir_.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      paths_.push_back(entry.path());
    }
  }
  std::sort(paths_.begin(), paths_.end());
}

ImageRecord DirectoryImageSource::load(std::size_t index) const {
  const auto& path = paths_.at(index);
  ImageRecord record;
  record.image = read_ppm(path);
  record.file_name = path.filename().string();

  std::filesystem::path mask_path = path;
  mask_path.replace_extension();
  mask_path += ".masks.json";
  if (use_file_masks_) {
    if (!std::filesystem::exists(mask_path)) {
      throw DataError("mask file missing for " + path.string());
    }
    MaskFile mf = read_mask_file(mask_path);
    record.has_file_masks = true;
    record.file_masks = std::move(mf.masks);
    record.coarse_masks = std::move(mf.coarse);
  } else if (std::filesystem::exists(mask_path)) {
    // extractor-driven runs may still take a coarse set from the mask file
    MaskFile mf = read_mask_file(mask_path);
    record.coarse_masks = std::move(mf.coarse);
  }
  return record;
}

}  // namespace pseudoris
