// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "imghash/imghash.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace imghash;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome integral_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const int w = 1 + static_cast<int>(rng() % 128), h = 1 + static_cast<int>(rng() % 128);
    const auto img = testing::random_image(w, h, 1000 + n);
    const IntegralImage ii(img);
    for (int q = 0; q < 100; ++q) {
      int x0 = static_cast<int>(rng() % w), x1 = static_cast<int>(rng() % w);
      int y0 = static_cast<int>(rng() % h), y1 = static_cast<int>(rng() % h);
      const BoxRegion r{std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
      worst = std::max(worst, std::abs(ii.box_sum(r) - testing::naive_box_sum(img, r)));
    }
  }
  const double s = seconds_since(t0);
  return {worst <= 1e-9 && s < 5.0, fmt("max abs error %.3g, %.2f s", worst, s)};
}

Outcome hessian_oracle() {
  // Relative tolerance 1e-9 with an absolute floor of 1e-15 for responses that
  // cancel to (near) zero, where a relative bound is meaningless.
  double worst_rel = 0.0, worst_abs = 0.0;
  bool ok = true;
  for (int n = 0; n < 20; ++n) {
    const auto img = testing::random_image(48, 48, 2000 + n);
    const IntegralImage ii(img);
    for (int L : {9, 15}) {
      const auto k = testing::make_lobe_kernels(L);
      for (int y = L / 2; y + L / 2 < 48; ++y)
        for (int x = L / 2; x + L / 2 < 48; ++x) {
          const double want = testing::oracle_response(img, k, x, y);
          const double err = std::abs(hessian_response(ii, x, y, L) - want);
          if (err > 1e-9 * std::abs(want) + 1e-15) ok = false;
          worst_abs = std::max(worst_abs, err);
          if (std::abs(want) > 1e-6) worst_rel = std::max(worst_rel, err / std::abs(want));
        }
    }
  }
  return {ok, fmt("worst relative error %.3g (|v| > 1e-6), worst absolute error %.3g",
                  worst_rel, worst_abs)};
}

Outcome detector_brute_force() {
  std::size_t total = 0;
  for (int n = 0; n < 10; ++n) {
    const auto img = testing::random_image(48, 48, 3000 + n);
    const auto got = detect_keypoints(img);
    const auto want = testing::brute_force_detect(img, {});
    if (got.size() != want.size())
      return {false, "image " + std::to_string(n) + ": " + std::to_string(got.size()) +
                         " vs " + std::to_string(want.size()) + " keypoints"};
    for (std::size_t i = 0; i < got.size(); ++i)
      if (got[i].x != want[i].x || got[i].y != want[i].y ||
          got[i].filter_size != want[i].filter_size ||
          std::abs(got[i].response - want[i].response) > 1e-9 * want[i].response)
        return {false, "image " + std::to_string(n) + ": keypoint " + std::to_string(i) +
                           " differs"};
    total += got.size();
  }
  return {true, std::to_string(total) + " keypoints matched over 10 images"};
}

Outcome lloyd_properties() {
  std::mt19937_64 rng(4);
  int increases = 0, not_fixed = 0;
  double worst_shift = 0.0;
  for (int n = 0; n < 200; ++n) {
    const std::size_t count = 5 + rng() % 300;
    std::uniform_real_distribution<double> u(0.0, 512.0);
    std::vector<Point2> pts(count);
    for (auto& p : pts) p = {u(rng), u(rng)};
    KMeansConfig cfg;
    cfg.k = 1 + rng() % std::min<std::size_t>(count, 16);
    cfg.rng_seed = static_cast<std::uint64_t>(n);
    const auto r = kmeans(pts, cfg);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      if (r.objective_trace[i] > r.objective_trace[i - 1] * (1.0 + 1e-12)) ++increases;
    if (!r.converged) {
      ++not_fixed;
      continue;
    }
    const auto again = lloyd(pts, r.centers, cfg);
    double shift = 0.0;
    for (std::size_t j = 0; j < cfg.k; ++j)
      shift = std::max(shift, distance(again.centers[j], r.centers[j]));
    worst_shift = std::max(worst_shift, shift);
    if (again.iterations > 1 || shift >= 1e-6) ++not_fixed;
  }
  return {increases == 0 && not_fixed == 0,
          fmt("%.0f objective increases, %.0f non-fixed points, worst re-run shift %.3g",
              increases, not_fixed, worst_shift)};
}

Outcome self_verification() {
  double worst = 0.0;
  int authentic = 0;
  for (int n = 0; n < 20; ++n) {
    const auto img = synth_textured(512, 512, derive_seed(5000, n));
    KMeansConfig k;
    k.rng_seed = static_cast<std::uint64_t>(n);
    const auto h = generate_hash(img, {}, k);
    const auto rep = verify(img, decode_hash(encode_hash(h)), Threshold{}, {}, k);
    worst = std::max(worst, rep.min_distance);
    authentic += rep.verdict == Verdict::authentic;
  }
  return {worst < 1e-6 && authentic == 20,
          fmt("worst min distance %.3g, %.0f/20 authentic", worst, authentic)};
}

Outcome payload_size() {
  const auto img = synth_textured(256, 256, 6);
  const auto h = generate_hash(img);
  const auto bytes = encode_hash(h);
  const auto payload = bytes.size() - kHashHeaderSize;
  const bool round_trip = decode_hash(bytes) == h;
  return {payload == 8 && round_trip,
          fmt("payload %.0f bytes (%.0f bits), total %.0f bytes, round trip ", payload,
              payload * 8, bytes.size()) +
              (round_trip ? "exact" : "MISMATCH")};
}

Outcome k_sweep() {
  const auto t0 = Clock::now();
  std::vector<ImagePair> pairs;
  for (int n = 0; n < 4; ++n) {
    const auto img = synth_textured(512, 512, derive_seed(7000, n));
    pairs.push_back({std::to_string(n), img, salt_pepper(img, 0.02, derive_seed(7100, n))});
  }
  const auto rows = sweep_k(pairs, {1, 8, 32}, {}, {}, default_jobs());
  const double a1 = rows[0].average_min_distance, a8 = rows[1].average_min_distance,
               a32 = rows[2].average_min_distance;
  const double s = seconds_since(t0);
  std::size_t skipped = 0;
  for (const auto& r : rows) skipped += r.skipped.size();
  return {a1 >= a8 && a8 >= a32 && a32 <= 0.5 && s < 60.0 && skipped == 0,
          fmt("avg k=1 %.4f, k=8 %.4f, k=32 %.4f, %.1f s", a1, a8, a32, s)};
}

Outcome calibration() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> lo(0.0, 1.0), hi(3.0, 8.0);
  std::vector<double> orig(50), tamp(50);
  for (auto& d : orig) d = lo(rng);
  for (auto& d : tamp) d = hi(rng);
  // include the boundary values of the stated ranges
  orig[0] = 1.0;
  tamp[0] = 3.0;
  const auto r = calibrate_from_distances(orig, tamp, linear_grid(0.0, 5.0, 0.5));
  bool monotone = true;
  double acc_o = 0, acc_t = 0;
  for (std::size_t i = 0; i < r.curve.size(); ++i) {
    if (i > 0 && (r.curve[i].original_accuracy < r.curve[i - 1].original_accuracy ||
                  r.curve[i].tampered_accuracy > r.curve[i - 1].tampered_accuracy))
      monotone = false;
    if (r.curve[i].threshold == r.crossing_threshold) {
      acc_o = r.curve[i].original_accuracy;
      acc_t = r.curve[i].tampered_accuracy;
    }
  }
  return {r.crossing_threshold > 1.0 && r.crossing_threshold < 3.0 && acc_o == 1.0 &&
              acc_t == 1.0 && monotone,
          fmt("crossing %.4f, accuracies %.2f / %.2f", r.crossing_threshold, acc_o, acc_t)};
}

Outcome corpus_evaluation() {
  const auto dir = testing::temp_dir("acceptance_corpus");
  fs::create_directories(dir / "src");
  for (int n = 0; n < 20; ++n) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%02d.png", n);
    save_png(synth_textured(512, 512, derive_seed(9000, n)), dir / "src" / name);
  }
  CorpusPlan plan;
  plan.jpeg_qualities = {90};
  plan.tamper_fractions = {0.05};
  plan.fill = FillMode::noise;
  plan.seed = 9;
  plan.jobs = default_jobs();
  write_manifest(dir / "manifest.csv", build_corpus(dir / "src", dir / "out", plan));
  const auto result = evaluate(read_manifest(dir / "manifest.csv"), Threshold{}, {}, {},
                               default_jobs());
  write_evaluation_summary_csv(dir / "summary.csv", result);

  std::ifstream in(dir / "summary.csv");
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
  if (f.size() != 8) return {false, "malformed summary CSV"};
  const double detection = std::stod(f[3]), false_alarm = std::stod(f[6]);
  return {detection > false_alarm && f[7] == "0",
          fmt("detection rate %.2f (%.0f/%.0f), false-alarm rate %.2f", detection,
              result.detected, result.tampered_rows, false_alarm)};
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

/// Snapshot every file under `root` (relative path -> bytes).
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = file_bytes(e.path());
  return out;
}

int cli_run(const std::vector<std::string>& args, std::string& stdout_text) {
  std::vector<const char*> argv{"imghash"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  stdout_text = out.str();
  return code;
}

Outcome cli_determinism() {
  const auto dir = testing::temp_dir("acceptance_cli");
  const auto p = [&](const std::string& s) { return (dir / "work" / s).string(); };
  const std::vector<std::vector<std::string>> steps{
      {"corpus", "synth", "-o", p("src"), "--count", "4", "--width", "192", "--height", "192",
       "--seed", "3"},
      {"hash", p("src/synth_0000.png"), "-o", p("h.bin"), "--k", "3", "--seed", "5", "--text"},
      {"attack", p("src/synth_0000.png"), "-o", p("sp.png"), "--saltpepper", "0.05", "--seed",
       "6"},
      {"attack", p("src/synth_0000.png"), "-o", p("tn.png"), "--tamper", "0.1", "--mode",
       "noise", "--seed", "7"},
      {"attack", p("src/synth_0000.png"), "-o", p("ts.png"), "--tamper", "0.1", "--mode",
       "splice", "--donor", p("src/synth_0001.png"), "--seed", "7"},
      {"attack", p("src/synth_0000.png"), "-o", p("jq.png"), "--jpeg", "70"},
      {"verify", p("sp.png"), p("h.bin")},
      {"corpus", "build", p("src"), "-o", p("out"), "--manifest", p("m.csv"), "--jpeg", "90",
       "--saltpepper", "0.02", "--tamper", "0.05", "--mode", "splice", "--seed", "8",
       "--jobs", "4"},
      {"experiment", "sweep-k", "--manifest", p("m.csv"), "-o", p("sweep.csv"), "--k-values",
       "1,4", "--seed", "2", "--jobs", "4"},
      {"experiment", "calibrate", "--manifest", p("m.csv"), "-o", p("cal.csv"), "--summary",
       p("cal_summary.csv"), "--seed", "2", "--jobs", "3"},
      {"experiment", "evaluate", "--manifest", p("m.csv"), "-o", p("eval.csv"), "--summary",
       p("eval_summary.csv"), "--seed", "2", "--jobs", "2"},
  };
  std::vector<std::pair<int, std::string>> first, second;
  std::map<std::string, std::string> files_first;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(dir / "work");
    fs::create_directories(dir / "work");
    auto& log = pass == 0 ? first : second;
    for (const auto& s : steps) {
      std::string text;
      const int code = cli_run(s, text);
      if (code == cli::kExitError) return {false, "step '" + s[0] + "' failed"};
      log.emplace_back(code, text);
    }
    if (pass == 0) files_first = snapshot(dir / "work");
  }
  const auto files_second = snapshot(dir / "work");
  const bool same = first == second && files_first == files_second;
  return {same, std::to_string(steps.size()) + " subcommand runs, " +
                    std::to_string(files_first.size()) + " output files" +
                    (same ? " byte-identical" : " DIFFER")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"integral image matches naive box sums (100 images x 100 regions)", integral_oracle},
      {"box-filter Hessian matches dense-kernel oracle (sizes 9, 15)", hessian_oracle},
      {"detector matches exhaustive 26-neighbor scan", detector_brute_force},
      {"Lloyd objective non-increasing and converged centers are fixed points",
       lloyd_properties},
      {"self-verification distance below 1e-6 on 20 images", self_verification},
      {"k=1 hash payload is 64 bits and round-trips", payload_size},
      {"k sweep under salt-and-pepper decays toward zero", k_sweep},
      {"calibration crossing between separated distance populations", calibration},
      {"corpus evaluation detects tampering above the false-alarm rate", corpus_evaluation},
      {"CLI outputs are deterministic across runs", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
