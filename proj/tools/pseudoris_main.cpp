// pseudoris: generate referring-expression pseudo-annotations from unlabeled
// images with pluggable captioner/scorer/mask backends.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <set>

#include "pseudoris/io.hpp"
#include "pseudoris/synthworld.hpp"

namespace {

using namespace pseudoris;

struct GenerateArgs {
  std::string images_dir;
  std::string out;
  std::string config_file;
  std::string dump_file;
  std::string captioner;
  std::string scorer;
  std::string mask_source;
  std::string metric;
  std::string grid;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double tau = 0.0;
  bool tau_set = false;
};

PipelineConfig effective_config(const GenerateArgs& args) {
  // Precedence: flags > config file > built-in defaults; seed additionally
  // falls back to PSEUDORIS_SEED.
  FlatConfig flat = pipeline_config_to_flat(PipelineConfig{});
  FlatConfig overrides;
  if (!args.config_file.empty()) overrides = read_flat_config(args.config_file);
  if (!args.captioner.empty()) overrides["backends.captioner"] = args.captioner;
  if (!args.scorer.empty()) overrides["backends.scorer"] = args.scorer;
  if (!args.mask_source.empty()) overrides["backends.mask_source"] = args.mask_source;
  if (!args.metric.empty()) overrides["filter.metric"] = args.metric;
  if (!args.grid.empty()) overrides["decoding.grid"] = args.grid;
  if (args.tau_set) overrides["filter.tau"] = fixed6(args.tau);
  if (args.seed_set) {
    overrides["pipeline.seed"] = std::to_string(args.seed);
  } else if (!overrides.count("pipeline.seed")) {
    if (const char* env = std::getenv("PSEUDORIS_SEED")) {
      overrides["pipeline.seed"] = env;
    }
  }
  for (const auto& [k, v] : overrides) flat[k] = v;
  return pipeline_config_from_flat(flat);
}

int cmd_generate(const GenerateArgs& args) {
  const PipelineConfig config = effective_config(args);
  PipelineBackends backends =
      resolve_pipeline_backends(default_registry(), config);
  DirectoryImageSource source(args.images_dir, config.mask_source == "file");

  CandidateDump dump;
  auto [annotations, stats] = run_pipeline(
      source, backends, config, args.dump_file.empty() ? nullptr : &dump);

  const std::string digest = config_digest(config);
  const std::filesystem::path out_path(args.out);
  write_annotations(out_path, annotations, digest);
  write_stats(out_path.string() + ".stats.json", stats);
  if (!args.dump_file.empty()) {
    dump.config_digest = digest;
    write_dump(args.dump_file, dump);
  }

  RunManifest manifest;
  manifest.config = pipeline_config_to_flat(config);
  manifest.seed = config.seed;
  manifest.timestamp = iso8601_utc_now();
  for (const auto& p : source.image_paths()) {
    manifest.input_checksums[p.filename().string()] = file_checksum_hex(p);
    std::filesystem::path mask_path = p;
    mask_path.replace_extension();
    mask_path += ".masks.json";
    if (std::filesystem::exists(mask_path)) {
      manifest.input_checksums[mask_path.filename().string()] =
          file_checksum_hex(mask_path);
    }
  }
  write_manifest(out_path.string() + ".manifest.json", manifest);

  std::cout << "images " << stats.n_images << " (skipped "
            << stats.n_images_skipped << "), masks " << stats.n_masks
            << ", candidates " << stats.n_candidates << ", kept "
            << stats.n_kept << ", vocabulary " << stats.vocabulary_size << "\n";
  return stats.n_images_skipped > 0 ? 1 : 0;
}

int cmd_filter(const std::string& dump_file, const std::string& out,
               const std::string& metric, double tau) {
  const CandidateDump dump = read_dump(dump_file);
  FilterConfig filter;
  filter.metric = filter_metric_from_string(metric);
  filter.tau = tau;
  filter.validate();

  const auto annotations = refilter_dump(dump, filter);
  const std::string digest = hex64(fnv1a(dump.config_digest + "|" +
                                         to_string(filter.metric) + "|" +
                                         fixed6(filter.tau)));
  write_annotations(out, annotations, digest);

  RunManifest manifest;
  manifest.config["filter.metric"] = to_string(filter.metric);
  manifest.config["filter.tau"] = fixed6(filter.tau);
  manifest.config["source_digest"] = dump.config_digest;
  manifest.timestamp = iso8601_utc_now();
  manifest.input_checksums[std::filesystem::path(dump_file).filename().string()] =
      file_checksum_hex(dump_file);
  write_manifest(out + ".manifest.json", manifest);

  std::int64_t total = 0;
  for (const auto& img : dump.images) {
    for (const auto& m : img.masks) {
      total += static_cast<std::int64_t>(m.candidates.size());
    }
  }
  std::int64_t kept = 0;
  for (const auto& a : annotations) kept += static_cast<std::int64_t>(a.captions.size());
  std::cout << "kept " << kept << " of " << total << " candidates\n";
  return 0;
}

int cmd_stats(const std::string& annotations_file, const std::string& dump_file) {
  const AnnotationsFile file = read_annotations(annotations_file);
  CorpusStats stats;
  std::set<std::string> images;
  for (const auto& a : file.annotations) {
    images.insert(a.image_id);
    ++stats.n_masks;
    stats.n_kept += static_cast<std::int64_t>(a.captions.size());
  }
  stats.n_images = static_cast<std::int64_t>(images.size());
  stats.vocabulary_size = caption_vocabulary_size(file.annotations);
  if (!dump_file.empty()) {
    const CandidateDump dump = read_dump(dump_file);
    for (const auto& img : dump.images) {
      for (const auto& m : img.masks) {
        stats.n_candidates += static_cast<std::int64_t>(m.candidates.size());
      }
    }
  }
  std::cout << "n_candidates = " << stats.n_candidates << "\n"
            << "n_images = " << stats.n_images << "\n"
            << "n_kept = " << stats.n_kept << "\n"
            << "n_masks = " << stats.n_masks << "\n"
            << "vocabulary_size = " << stats.vocabulary_size << "\n";
  return 0;
}

int cmd_inspect(const std::string& annotations_file, const std::string& image_id) {
  const AnnotationsFile file = read_annotations(annotations_file);
  bool found = false;
  for (const auto& ann : file.annotations) {
    if (ann.image_id != image_id) continue;
    if (!found) {
      std::cout << "image " << ann.image_id;
      if (!ann.file_name.empty()) std::cout << " (" << ann.file_name << ")";
      std::cout << "\n";
    }
    found = true;
    const BinaryMask mask = rle_decode(ann.mask);
    std::cout << "  mask " << ann.mask_index << ": " << mask.width << "x"
              << mask.height << " bbox=(" << mask.bbox.x0 << "," << mask.bbox.y0
              << ")-(" << mask.bbox.x1 << "," << mask.bbox.y1 << ") area="
              << mask.area << "\n";
    for (const auto& cap : ann.captions) {
      std::cout << "    [dos=" << fixed6(cap.dos) << " uos=" << fixed6(cap.uos)
                << " cos=" << fixed6(cap.cos) << " crop=" << fixed6(cap.crop.margin)
                << (cap.crop.masked ? "m" : "") << " decoder=" << cap.decoder_index
                << "] \"" << cap.text << "\"\n";
    }
  }
  if (!found) {
    std::cerr << "error: no annotations for image id '" << image_id << "'\n";
    return 2;
  }
  return 0;
}

int cmd_synth_bench(std::uint64_t seed, int scenes, int objects, double overlap,
                    const std::string& out) {
  synth::BenchmarkConfig config{seed, scenes, objects, overlap};
  const auto report = synth::run_benchmark(config);
  std::cout << benchmark_table(report);
  if (!out.empty()) {
    write_benchmark_record(out, report);
    RunManifest manifest;
    manifest.config["bench.n_objects"] = std::to_string(objects);
    manifest.config["bench.n_scenes"] = std::to_string(scenes);
    manifest.config["bench.overlap"] = fixed6(overlap);
    manifest.config["bench.seed"] = std::to_string(seed);
    manifest.seed = seed;
    manifest.timestamp = iso8601_utc_now();
    write_manifest(out + ".manifest.json", manifest);
  }
  return 0;
}

int cmd_synth_make(const std::string& out_dir, std::uint64_t seed, int scenes,
                   int objects, double overlap) {
  std::filesystem::create_directories(out_dir);
  const auto corpus = synth::make_corpus(seed, scenes, objects, overlap);
  for (const auto& scene : corpus) {
    const Image image = synth::render_scene(scene);
    const std::filesystem::path base = std::filesystem::path(out_dir) / scene.id;
    write_ppm(base.string() + ".ppm", image);
    MaskFile mf;
    mf.masks = synth::scene_masks(scene);
    write_mask_file(base.string() + ".masks.json", mf);
  }
  RunManifest manifest;
  manifest.config["synth.n_objects"] = std::to_string(objects);
  manifest.config["synth.n_scenes"] = std::to_string(scenes);
  manifest.config["synth.overlap"] = fixed6(overlap);
  manifest.config["synth.seed"] = std::to_string(seed);
  manifest.seed = seed;
  manifest.timestamp = iso8601_utc_now();
  write_manifest((std::filesystem::path(out_dir) / "manifest.json").string(),
                 manifest);
  std::cout << "wrote " << corpus.size() << " scenes to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pseudoris;
  synth::register_synthetic_backends(default_registry());

  CLI::App app{"pseudo-annotation generator for referring image segmentation"};
  app.require_subcommand(1);

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate",
                                 "run the full pipeline over an image directory");
  gen->add_option("--images", gen_args.images_dir, "directory of .ppm images")
      ->required();
  gen->add_option("--out", gen_args.out, "annotations output file")->required();
  gen->add_option("--config", gen_args.config_file, "flat key=value config file");
  gen->add_option("--dump", gen_args.dump_file,
                  "also write every scored candidate to this file");
  gen->add_option("--backend-captioner", gen_args.captioner, "captioner name");
  gen->add_option("--backend-scorer", gen_args.scorer, "scorer name");
  gen->add_option("--mask-source", gen_args.mask_source,
                  "mask extractor name, or 'file' for per-image mask files");
  gen->add_option("--metric", gen_args.metric,
                  "filter metric: uniqueness|correctness|distinctiveness");
  gen->add_option("--grid", gen_args.grid, "decoding grid DSL");
  auto* seed_opt = gen->add_option("--seed", gen_args.seed, "global seed");
  auto* tau_opt = gen->add_option("--tau", gen_args.tau, "filter threshold");

  std::string flt_dump, flt_out, flt_metric = "distinctiveness";
  double flt_tau = 1.3;
  auto* flt = app.add_subcommand("filter",
                                 "re-filter a candidate dump at a new threshold");
  flt->add_option("--dump", flt_dump, "candidate dump from generate --dump")
      ->required();
  flt->add_option("--out", flt_out, "annotations output file")->required();
  flt->add_option("--metric", flt_metric, "filter metric");
  flt->add_option("--tau", flt_tau, "filter threshold");

  std::string stats_annotations, stats_dump;
  auto* stats = app.add_subcommand("stats", "print corpus statistics");
  stats->add_option("--annotations", stats_annotations, "annotations file")
      ->required();
  stats->add_option("--dump", stats_dump,
                    "candidate dump; supplies the total candidate count");

  std::string ins_annotations, ins_image_id;
  auto* ins = app.add_subcommand("inspect", "print one image's annotations");
  ins->add_option("--annotations", ins_annotations, "annotations file")
      ->required();
  ins->add_option("--image-id", ins_image_id, "image id to show")->required();

  std::uint64_t bench_seed = 0;
  int bench_scenes = 50, bench_objects = 4;
  double bench_overlap = 1.0;
  std::string bench_out;
  auto* bench = app.add_subcommand(
      "synth-bench", "ablation benchmark on the synthetic world");
  bench->add_option("--seed", bench_seed, "corpus seed");
  bench->add_option("--scenes", bench_scenes, "number of scenes");
  bench->add_option("--objects", bench_objects, "objects per scene");
  bench->add_option("--overlap", bench_overlap, "attribute overlap in [0,1]");
  bench->add_option("--out", bench_out, "machine-readable record file");

  std::string make_dir;
  std::uint64_t make_seed = 0;
  int make_scenes = 10, make_objects = 4;
  double make_overlap = 1.0;
  auto* make = app.add_subcommand(
      "synth-make", "materialize a synthetic corpus as .ppm + mask files");
  make->add_option("--out-dir", make_dir, "output directory")->required();
  make->add_option("--seed", make_seed, "corpus seed");
  make->add_option("--scenes", make_scenes, "number of scenes");
  make->add_option("--objects", make_objects, "objects per scene");
  make->add_option("--overlap", make_overlap, "attribute overlap in [0,1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      gen_args.seed_set = seed_opt->count() > 0;
      gen_args.tau_set = tau_opt->count() > 0;
      return cmd_generate(gen_args);
    }
    if (flt->parsed()) return cmd_filter(flt_dump, flt_out, flt_metric, flt_tau);
    if (stats->parsed()) return cmd_stats(stats_annotations, stats_dump);
    if (ins->parsed()) return cmd_inspect(ins_annotations, ins_image_id);
    if (bench->parsed()) {
      return cmd_synth_bench(bench_seed, bench_scenes, bench_objects,
                             bench_overlap, bench_out);
    }
    if (make->parsed()) {
      return cmd_synth_make(make_dir, make_seed, make_scenes, make_objects,
                            make_overlap);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
