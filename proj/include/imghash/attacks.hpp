#pragma once

// Content-preserving attacks (JPEG round trip, salt-and-pepper noise),
// rectangular tamper patches, and the batch corpus builder with its manifest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "imghash/errors.hpp"
#include "imghash/image.hpp"
#include "imghash/integral.hpp"
#include "imghash/parallel.hpp"
#include "imghash/rng.hpp"

namespace imghash {

/// Encode at `quality` and decode back.
inline GrayImage jpeg_compress(const GrayImage& img, int quality) {
  return decode_jpeg(encode_jpeg(img, quality));
}

/// Each pixel independently becomes 0 or 1 (equal odds) with probability `density`.
inline GrayImage salt_pepper(const GrayImage& img, double density, std::uint64_t rng_seed) {
  if (!(density >= 0.0 && density <= 1.0))
    throw DomainError("salt-and-pepper density must be in [0, 1]");
  Rng rng(rng_seed);
  GrayImage out = img;
  for (double& v : out.pixels()) {
    const double hit = unit_real(rng);
    const double polarity = unit_real(rng);
    if (hit < density) v = polarity < 0.5 ? 0.0 : 1.0;
  }
  return out;
}

enum class FillMode { solid, noise, splice };

inline const char* to_string(FillMode m) noexcept {
  switch (m) {
    case FillMode::solid: return "solid";
    case FillMode::noise: return "noise";
    case FillMode::splice: return "splice";
  }
  return "noise";
}

inline FillMode parse_fill_mode(std::string_view s) {
  if (s == "solid" || s == "solid-fill") return FillMode::solid;
  if (s == "noise" || s == "noise-fill") return FillMode::noise;
  if (s == "splice" || s == "splice-from-donor") return FillMode::splice;
  throw DomainError("unknown fill mode '" + std::string(s) + "'");
}

struct TamperSpec {
  double area_fraction = 0.05;
  FillMode mode = FillMode::noise;
  std::uint64_t rng_seed = 0;
};

struct TamperResult {
  GrayImage image;
  BoxRegion region;
};

/// Paint a random rectangle of at most area_fraction * W * H pixels, aspect
/// ratio drawn from [0.5, 2]. Pixels outside the returned region are
/// untouched. `donor` is required for FillMode::splice.
inline TamperResult tamper_patch(const GrayImage& img, const TamperSpec& spec,
                                 const GrayImage* donor = nullptr) {
  if (!(spec.area_fraction > 0.0 && spec.area_fraction < 1.0))
    throw DomainError("tamper area fraction must be in (0, 1)");
  const int W = img.width(), H = img.height();
  const auto budget = static_cast<long long>(
      std::floor(spec.area_fraction * static_cast<double>(W) * H));
  if (budget < 1) throw DomainError("tamper patch of zero area");

  Rng rng(spec.rng_seed);
  const double aspect = 0.5 + 1.5 * unit_real(rng);  // width / height
  long long pw = std::max(1LL, static_cast<long long>(std::sqrt(budget * aspect)));
  long long ph = std::max(1LL, budget / pw);
  if (pw > W) {
    pw = W;
    ph = budget / pw;
  }
  if (ph > H) {
    ph = H;
    pw = budget / ph;
  }
  if (pw < 1 || ph < 1 || pw > W || ph > H || pw * ph > budget)
    throw DomainError("tamper patch does not fit the image");

  const int x0 = static_cast<int>(uniform_int(rng, 0, W - pw));
  const int y0 = static_cast<int>(uniform_int(rng, 0, H - ph));
  const BoxRegion region{x0, y0, x0 + static_cast<int>(pw) - 1, y0 + static_cast<int>(ph) - 1};

  TamperResult out{img, region};
  switch (spec.mode) {
    case FillMode::solid: {
      const double v = unit_real(rng);
      for (int y = region.y0; y <= region.y1; ++y)
        for (int x = region.x0; x <= region.x1; ++x) out.image(x, y) = v;
      break;
    }
    case FillMode::noise:
      for (int y = region.y0; y <= region.y1; ++y)
        for (int x = region.x0; x <= region.x1; ++x) out.image(x, y) = unit_real(rng);
      break;
    case FillMode::splice: {
      if (donor == nullptr) throw DomainError("splice fill needs a donor image");
      if (donor->width() < pw || donor->height() < ph)
        throw DomainError("donor image smaller than the tamper patch");
      const int dx = static_cast<int>(uniform_int(rng, 0, donor->width() - pw));
      const int dy = static_cast<int>(uniform_int(rng, 0, donor->height() - ph));
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x)
          out.image(region.x0 + x, region.y0 + y) = (*donor)(dx + x, dy + y);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

enum class AttackKind { jpeg, saltpepper, tamper, identity };
enum class Label { original, tampered };

inline const char* to_string(AttackKind k) noexcept {
  switch (k) {
    case AttackKind::jpeg: return "jpeg";
    case AttackKind::saltpepper: return "saltpepper";
    case AttackKind::tamper: return "tamper";
    case AttackKind::identity: return "identity";
  }
  return "identity";
}

inline const char* to_string(Label l) noexcept {
  return l == Label::original ? "original" : "tampered";
}

inline AttackKind parse_attack_kind(std::string_view s) {
  if (s == "jpeg") return AttackKind::jpeg;
  if (s == "saltpepper") return AttackKind::saltpepper;
  if (s == "tamper") return AttackKind::tamper;
  if (s == "identity") return AttackKind::identity;
  throw FormatError("unknown attack kind '" + std::string(s) + "'");
}

inline Label parse_label(std::string_view s) {
  if (s == "original") return Label::original;
  if (s == "tampered") return Label::tampered;
  throw FormatError("unknown label '" + std::string(s) + "'");
}

struct ManifestRow {
  std::string source_path;
  std::string output_path;
  AttackKind kind = AttackKind::identity;
  double parameter = 0.0;
  std::uint64_t rng_seed = 0;
  Label label = Label::original;

  bool operator==(const ManifestRow&) const = default;
};

inline constexpr std::string_view kManifestHeader =
    "source_path,output_path,kind,parameter,rng_seed,label";

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw FormatError("unterminated quote in CSV line");
  return fields;
}

/// Shortest round-trippable-enough text for a manifest parameter.
inline std::string format_parameter(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& r : rows)
    out << detail::csv_field(r.source_path) << ',' << detail::csv_field(r.output_path) << ','
        << to_string(r.kind) << ',' << detail::format_parameter(r.parameter) << ','
        << r.rng_seed << ',' << to_string(r.label) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader) throw FormatError(path.string() + ": unexpected manifest header");
  std::vector<ManifestRow> rows;
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
    try {
      rows.push_back({f[0], f[1], parse_attack_kind(f[2]), std::stod(f[3]),
                      std::stoull(f[4]), parse_label(f[5])});
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad numeric field");
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Corpus builder

struct CorpusPlan {
  std::vector<int> jpeg_qualities;
  std::vector<double> saltpepper_densities;
  std::vector<double> tamper_fractions;
  FillMode fill = FillMode::noise;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// PNG and JPEG files directly inside `dir`, sorted by name.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Apply every attack in `plan` to every image in `srcdir`, write PNGs into
/// `outdir`, and return the manifest rows in deterministic order. Item i uses
/// seed derive_seed(plan.seed, i). Splice donors are the next source image.
inline std::vector<ManifestRow> build_corpus(const std::filesystem::path& srcdir,
                                             const std::filesystem::path& outdir,
                                             const CorpusPlan& plan) {
  const auto sources = list_images(srcdir);
  if (sources.empty()) throw IoError("no PNG/JPEG images in " + srcdir.string());
  std::filesystem::create_directories(outdir);

  struct Item {
    std::size_t source;
    AttackKind kind;
    double parameter;
    std::string name;
  };
  std::vector<Item> items;
  char buf[64];
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto stem = sources[s].stem().string();
    for (int q : plan.jpeg_qualities) {
      std::snprintf(buf, sizeof buf, "__jpeg_q%03d.png", q);
      items.push_back({s, AttackKind::jpeg, static_cast<double>(q), stem + buf});
    }
    for (double d : plan.saltpepper_densities) {
      std::snprintf(buf, sizeof buf, "__sp_d%.4f.png", d);
      items.push_back({s, AttackKind::saltpepper, d, stem + buf});
    }
    for (double f : plan.tamper_fractions) {
      std::snprintf(buf, sizeof buf, "__tamper_f%.4f.png", f);
      items.push_back({s, AttackKind::tamper, f, stem + buf});
    }
  }

  std::vector<ManifestRow> rows(items.size());
  parallel_for(items.size(), plan.jobs, [&](std::size_t i) {
    const Item& item = items[i];
    const std::uint64_t seed = derive_seed(plan.seed, i);
    const GrayImage src = load_grayscale(sources[item.source]);
    GrayImage out;
    Label label = Label::original;
    switch (item.kind) {
      case AttackKind::jpeg:
        out = jpeg_compress(src, static_cast<int>(item.parameter));
        break;
      case AttackKind::saltpepper:
        out = salt_pepper(src, item.parameter, seed);
        break;
      case AttackKind::tamper: {
        std::optional<GrayImage> donor;
        if (plan.fill == FillMode::splice)
          donor = load_grayscale(sources[(item.source + 1) % sources.size()]);
        out = tamper_patch(src, {item.parameter, plan.fill, seed}, donor ? &*donor : nullptr)
                  .image;
        label = Label::tampered;
        break;
      }
      case AttackKind::identity:
        out = src;
        break;
    }
    const auto out_path = outdir / item.name;
    save_png(out, out_path);
    rows[i] = {sources[item.source].string(), out_path.string(), item.kind, item.parameter,
               seed, label};
  });
  return rows;
}

}  // namespace imghash
