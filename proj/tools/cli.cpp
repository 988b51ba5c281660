#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "imghash/imghash.hpp"
#include "imghash/report_json.hpp"

namespace imghash::cli {
namespace {

namespace fs = std::filesystem;

struct DetectorFlags {
  int octaves = DetectorConfig{}.octaves;
  int levels = DetectorConfig{}.levels_per_octave;
  double response_threshold = DetectorConfig{}.response_threshold;
  std::size_t max_keypoints = 0;

  void add_to(CLI::App* app) {
    app->add_option("--octaves", octaves, "Scale-space octaves")->capture_default_str();
    app->add_option("--levels", levels, "Levels per octave (>= 3)")->capture_default_str();
    app->add_option("--response-threshold", response_threshold,
                    "Minimum area-normalized det(H) for a keypoint")
        ->capture_default_str();
    app->add_option("--max-keypoints", max_keypoints, "Keep only the strongest N (0 = all)")
        ->capture_default_str();
  }

  DetectorConfig config() const {
    DetectorConfig c;
    c.octaves = octaves;
    c.levels_per_octave = levels;
    c.response_threshold = response_threshold;
    if (max_keypoints > 0) c.max_keypoints = max_keypoints;
    c.validate();
    return c;
  }
};

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ImagePair> load_pairs(const std::vector<ManifestRow>& rows) {
  std::map<std::string, GrayImage> originals;
  std::vector<ImagePair> pairs;
  for (const auto& r : rows) {
    auto it = originals.find(r.source_path);
    if (it == originals.end())
      it = originals.emplace(r.source_path, load_grayscale(r.source_path)).first;
    pairs.push_back({r.output_path, it->second, load_grayscale(r.output_path)});
  }
  return pairs;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compact perceptual image hashing and tamper verification"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // hash
  auto* hash_cmd = app.add_subcommand("hash", "Generate the hash of an image");
  std::string hash_image, hash_out;
  std::size_t hash_k = 1;
  std::uint64_t hash_seed = 0;
  bool hash_text = false;
  DetectorFlags hash_det;
  hash_cmd->add_option("image", hash_image, "PNG or JPEG image")->required();
  hash_cmd->add_option("-o,--output", hash_out, "Binary hash file to write")->required();
  hash_cmd->add_option("--k", hash_k, "Number of cluster centers")->capture_default_str();
  hash_cmd->add_option("--seed", hash_seed, "k-means++ seed")->capture_default_str();
  hash_cmd->add_flag("--text", hash_text, "Also print the centers as text on stdout");
  hash_det.add_to(hash_cmd);

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Verify an image against a hash file");
  std::string verify_image, verify_hash;
  double verify_threshold = kDefaultThreshold;
  std::size_t verify_k = 0;
  DetectorFlags verify_det;
  verify_cmd->add_option("image", verify_image, "Received image")->required();
  verify_cmd->add_option("hashfile", verify_hash, "Received hash")->required();
  verify_cmd->add_option("--threshold", verify_threshold, "Decision threshold in pixels")
      ->capture_default_str();
  verify_cmd->add_option("--k", verify_k, "Expected k (default: taken from the hash)");
  verify_det.add_to(verify_cmd);

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "Apply one attack and write a PNG");
  std::string attack_image, attack_out, attack_mode = "noise", attack_donor;
  int attack_jpeg = 0;
  double attack_sp = -1.0, attack_tamper = 0.0;
  std::uint64_t attack_seed = 0;
  attack_cmd->add_option("image", attack_image, "Input image")->required();
  attack_cmd->add_option("-o,--output", attack_out, "Output PNG")->required();
  auto* opt_jpeg = attack_cmd->add_option("--jpeg", attack_jpeg, "JPEG quality 1..100");
  auto* opt_sp = attack_cmd->add_option("--saltpepper", attack_sp, "Salt-and-pepper density");
  auto* opt_tamper =
      attack_cmd->add_option("--tamper", attack_tamper, "Tamper patch area fraction");
  attack_cmd->add_option("--mode", attack_mode, "Patch fill: solid | noise | splice")
      ->capture_default_str();
  attack_cmd->add_option("--donor", attack_donor, "Donor image for --mode splice");
  attack_cmd->add_option("--seed", attack_seed, "Random seed")->capture_default_str();
  opt_jpeg->excludes(opt_sp)->excludes(opt_tamper);
  opt_sp->excludes(opt_tamper);

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Batch corpus generation");
  corpus_cmd->require_subcommand(1);
  auto* build_cmd = corpus_cmd->add_subcommand("build", "Attack every image in a directory");
  std::string build_src, build_out, build_manifest, build_mode = "noise";
  std::vector<int> build_jpeg;
  std::vector<double> build_sp, build_tamper;
  std::uint64_t build_seed = 0;
  std::size_t build_jobs = default_jobs();
  build_cmd->add_option("srcdir", build_src, "Directory of source images")->required();
  build_cmd->add_option("-o,--output", build_out, "Output directory")->required();
  build_cmd->add_option("--manifest", build_manifest, "Manifest CSV to write")->required();
  build_cmd->add_option("--jpeg", build_jpeg, "JPEG qualities")->delimiter(',');
  build_cmd->add_option("--saltpepper", build_sp, "Salt-and-pepper densities")->delimiter(',');
  build_cmd->add_option("--tamper", build_tamper, "Tamper area fractions")->delimiter(',');
  build_cmd->add_option("--mode", build_mode, "Patch fill: solid | noise | splice")
      ->capture_default_str();
  build_cmd->add_option("--seed", build_seed, "Base random seed")->capture_default_str();
  build_cmd->add_option("--jobs", build_jobs, "Worker threads");

  auto* synth_cmd = corpus_cmd->add_subcommand("synth", "Write synthetic textured images");
  std::string synth_out;
  int synth_count = 4, synth_width = 512, synth_height = 512;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("-o,--output", synth_out, "Output directory")->required();
  synth_cmd->add_option("--count", synth_count, "Number of images")->capture_default_str();
  synth_cmd->add_option("--width", synth_width)->capture_default_str();
  synth_cmd->add_option("--height", synth_height)->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Base random seed")->capture_default_str();

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Run an experiment over a manifest");
  exp_cmd->require_subcommand(1);
  std::string exp_manifest, exp_out, exp_summary;
  std::size_t exp_jobs = default_jobs();
  std::uint64_t exp_seed = 0;
  std::size_t exp_k = 1;
  DetectorFlags exp_det;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--manifest", exp_manifest, "Corpus manifest CSV")->required();
    c->add_option("-o,--output", exp_out, "CSV to write")->required();
    c->add_option("--jobs", exp_jobs, "Worker threads");
    c->add_option("--seed", exp_seed, "k-means++ seed for the sender")->capture_default_str();
    exp_det.add_to(c);
  };
  auto* sweep_cmd = exp_cmd->add_subcommand("sweep-k", "Average min distance per k");
  add_common(sweep_cmd);
  std::vector<std::size_t> sweep_ks = {1, 2, 4, 8, 16, 32};
  sweep_cmd->add_option("--k-values", sweep_ks, "k values")->delimiter(',');

  auto* cal_cmd = exp_cmd->add_subcommand("calibrate", "Accuracy-curve crossing per attack");
  add_common(cal_cmd);
  double grid_min = 0.0, grid_max = 10.0, grid_step = 0.05;
  cal_cmd->add_option("--k", exp_k)->capture_default_str();
  cal_cmd->add_option("--summary", exp_summary, "Crossing summary CSV");
  cal_cmd->add_option("--grid-min", grid_min)->capture_default_str();
  cal_cmd->add_option("--grid-max", grid_max)->capture_default_str();
  cal_cmd->add_option("--grid-step", grid_step)->capture_default_str();

  auto* eval_cmd = exp_cmd->add_subcommand("evaluate", "Per-image distances and rates");
  add_common(eval_cmd);
  double eval_threshold = kDefaultThreshold;
  eval_cmd->add_option("--k", exp_k)->capture_default_str();
  eval_cmd->add_option("--threshold", eval_threshold)->capture_default_str();
  eval_cmd->add_option("--summary", exp_summary, "Summary CSV (rates)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (hash_cmd->parsed()) {
      const auto dcfg = hash_det.config();
      KMeansConfig kcfg;
      kcfg.k = hash_k;
      kcfg.rng_seed = hash_seed;
      const auto h = generate_hash(load_grayscale(hash_image), dcfg, kcfg);
      write_bytes(hash_out, encode_hash(h));
      if (hash_text) out << format_hash_text(h);
      err << "wrote " << hash_out << " (k=" << h.k() << ", " << kBytesPerCenter * h.k() * 8
          << "-bit payload)\n";
      return kExitOk;
    }

    if (verify_cmd->parsed()) {
      const auto received = decode_hash(read_file_bytes(verify_hash));
      const auto dcfg = verify_det.config();
      KMeansConfig kcfg;
      kcfg.k = verify_k > 0 ? verify_k : received.k();
      const auto report = verify(load_grayscale(verify_image), received,
                                 Threshold(verify_threshold), dcfg, kcfg);
      out << to_json(report).dump() << "\n";
      return report.verdict == Verdict::authentic ? kExitOk : kExitTampered;
    }

    if (attack_cmd->parsed()) {
      const auto img = load_grayscale(attack_image);
      GrayImage result;
      if (*opt_jpeg) {
        result = jpeg_compress(img, attack_jpeg);
      } else if (*opt_sp) {
        result = salt_pepper(img, attack_sp, attack_seed);
      } else if (*opt_tamper) {
        const auto mode = parse_fill_mode(attack_mode);
        std::optional<GrayImage> donor;
        if (mode == FillMode::splice) {
          if (attack_donor.empty()) throw DomainError("--mode splice requires --donor");
          donor = load_grayscale(attack_donor);
        }
        const auto t = tamper_patch(img, {attack_tamper, mode, attack_seed},
                                    donor ? &*donor : nullptr);
        result = t.image;
        err << "patch " << t.region.x0 << "," << t.region.y0 << " - " << t.region.x1 << ","
            << t.region.y1 << " (" << t.region.area() << " px)\n";
      } else {
        err << "error: one of --jpeg, --saltpepper, --tamper is required\n";
        return kExitError;
      }
      save_png(result, attack_out);
      return kExitOk;
    }

    if (build_cmd->parsed()) {
      CorpusPlan plan{build_jpeg, build_sp, build_tamper, parse_fill_mode(build_mode),
                      build_seed, build_jobs};
      if (plan.jpeg_qualities.empty() && plan.saltpepper_densities.empty() &&
          plan.tamper_fractions.empty())
        throw DomainError("corpus build needs at least one of --jpeg, --saltpepper, --tamper");
      const auto rows = build_corpus(build_src, build_out, plan);
      write_manifest(build_manifest, rows);
      err << "wrote " << rows.size() << " images and " << build_manifest << "\n";
      return kExitOk;
    }

    if (synth_cmd->parsed()) {
      fs::create_directories(synth_out);
      for (int i = 0; i < synth_count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "synth_%04d.png", i);
        save_png(synth_textured(synth_width, synth_height, derive_seed(synth_seed, i)),
                 fs::path(synth_out) / name);
      }
      err << "wrote " << synth_count << " images to " << synth_out << "\n";
      return kExitOk;
    }

    const auto manifest = exp_cmd->parsed() ? read_manifest(exp_manifest)
                                            : std::vector<ManifestRow>{};
    const auto dcfg = exp_cmd->parsed() ? exp_det.config() : DetectorConfig{};
    KMeansConfig kcfg;
    kcfg.k = exp_k;
    kcfg.rng_seed = exp_seed;

    if (sweep_cmd->parsed()) {
      std::vector<ManifestRow> originals;
      for (const auto& r : manifest)
        if (r.label == Label::original) originals.push_back(r);
      if (originals.empty()) throw DomainError("manifest has no rows labeled original");
      const auto rows = sweep_k(load_pairs(originals), sweep_ks, dcfg, kcfg, exp_jobs);
      write_sweep_csv(exp_out, rows);
      for (const auto& r : rows)
        err << "k=" << r.k << " average=" << r.average_min_distance << " ("
            << r.per_image_min_distance.size() << " pairs, " << r.skipped.size()
            << " skipped)\n";
      return kExitOk;
    }

    if (cal_cmd->parsed()) {
      std::map<std::string, std::vector<ManifestRow>> originals_by_kind;
      std::vector<ManifestRow> tampered;
      for (const auto& r : manifest) {
        if (r.label == Label::tampered)
          tampered.push_back(r);
        else
          originals_by_kind[to_string(r.kind)].push_back(r);
      }
      if (tampered.empty() || originals_by_kind.empty())
        throw DomainError("calibration needs both original and tampered rows");
      const auto grid = linear_grid(grid_min, grid_max, grid_step);
      const auto tampered_d = pair_distances(load_pairs(tampered), dcfg, kcfg, exp_jobs);
      std::vector<CalibrationResult> results;
      for (const auto& [kind, rows] : originals_by_kind) {
        const auto orig_d = pair_distances(load_pairs(rows), dcfg, kcfg, exp_jobs);
        results.push_back(calibrate_from_distances(orig_d, tampered_d, grid, kind));
        err << kind << ": crossing " << results.back().crossing_threshold << " px at "
            << results.back().crossing_accuracy * 100.0 << "%\n";
      }
      write_calibration_csv(exp_out, results);
      if (!exp_summary.empty()) write_calibration_summary_csv(exp_summary, results);
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const auto result = evaluate(manifest, Threshold(eval_threshold), dcfg, kcfg, exp_jobs);
      write_evaluation_csv(exp_out, result);
      if (!exp_summary.empty()) write_evaluation_summary_csv(exp_summary, result);
      err << "detection rate " << (result.accuracy ? std::to_string(*result.accuracy) : "n/a")
          << " (" << result.detected << "/" << result.tampered_rows << "), false-alarm rate "
          << (result.false_alarm_rate ? std::to_string(*result.false_alarm_rate) : "n/a")
          << " (" << result.false_alarms << "/" << result.original_rows << "), "
          << result.failures << " failed rows\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  err << "error: no subcommand\n";
  return kExitError;
}

}  // namespace imghash::cli
