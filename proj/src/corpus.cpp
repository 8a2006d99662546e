#include "wr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "wr/error.hpp"
#include "wr/image.hpp"
#include "wr/parallel.hpp"

namespace wr::corpus {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// ---- synthetic handwriting -------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Portable draws on top of mt19937_64, whose output sequence is fixed by the
// standard (the <random> distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }
  bool chance(double p) { return uniform() < p; }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

struct Hand {
  double slant;         // radians, shear of upright strokes
  double stroke_width;  // pixels
  double x_height;      // pixels
  double line_spacing;  // baseline to baseline
  double advance;       // horizontal step between strokes
  double arc_rate;      // share of strokes joined by round arcs
  double tall_rate;     // share of ascenders / descenders
  double word_length;   // mean strokes per word
  double ink;
  double paper;
};

Hand draw_hand(std::uint64_t seed) {
  Rng rng(seed);
  Hand h{};
  h.slant = rng.uniform(-35.0, 35.0) * std::numbers::pi / 180.0;
  h.stroke_width = rng.uniform(0.9, 3.6);
  h.x_height = rng.uniform(6.0, 15.0);
  h.line_spacing = h.x_height * rng.uniform(1.9, 3.2);
  h.advance = rng.uniform(0.45, 1.1) * h.x_height;
  h.arc_rate = rng.uniform(0.0, 0.9);
  h.tall_rate = rng.uniform(0.05, 0.35);
  h.word_length = rng.uniform(2.5, 7.0);
  h.ink = rng.uniform(15.0, 90.0);
  h.paper = rng.uniform(175.0, 235.0);
  return h;
}

struct Point {
  double x;
  double y;
};

class Canvas {
 public:
  Canvas(int width, int height) : width_(width), height_(height), coverage_(static_cast<std::size_t>(width) * height, 0.0f) {}

  void segment(Point a, Point b, double thickness) {
    const double half = thickness / 2.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - half - 1)));
    const int x1 = std::min(width_ - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + half + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - half - 1)));
    const int y1 = std::min(height_ - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + half + 1)));
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len_sq = vx * vx + vy * vy;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double t = len_sq > 0.0 ? ((x - a.x) * vx + (y - a.y) * vy) / len_sq : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dist = std::hypot(x - (a.x + t * vx), y - (a.y + t * vy));
        const auto cov = static_cast<float>(std::clamp(half + 0.5 - dist, 0.0, 1.0));
        float& cell = coverage_[static_cast<std::size_t>(y) * width_ + x];
        cell = std::max(cell, cov);
      }
    }
  }

  void polyline(const std::vector<Point>& pts, double thickness) {
    for (std::size_t i = 1; i < pts.size(); ++i) segment(pts[i - 1], pts[i], thickness);
  }

  GrayImage render(const Hand& hand, Rng& rng, double noise_sigma) const {
    GrayImage img(width_, height_);
    // Slow paper tone drift across the page.
    const double gx = rng.uniform(-12.0, 12.0) / width_;
    const double gy = rng.uniform(-12.0, 12.0) / height_;
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        const double paper = hand.paper + gx * (x - width_ / 2.0) + gy * (y - height_ / 2.0);
        const double cov = coverage_[static_cast<std::size_t>(y) * width_ + x];
        const double v = paper - (paper - hand.ink) * cov + noise_sigma * rng.normal();
        img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    return img;
  }

 private:
  int width_;
  int height_;
  std::vector<float> coverage_;
};

GrayImage render_page(const Hand& hand, std::uint64_t page_seed, int width, int height) {
  Rng rng(page_seed);
  Canvas canvas(width, height);
  const double shear = std::tan(hand.slant);
  const double margin = 6.0;
  double baseline = margin + hand.x_height * 2.0 + rng.uniform(0.0, hand.line_spacing);
  while (baseline < height - margin) {
    double x = margin + rng.uniform(0.0, hand.advance * 3.0);
    int left_in_word = std::max(1, static_cast<int>(std::lround(hand.word_length + rng.normal())));
    while (x < width - margin) {
      const double jitter = rng.normal() * 0.06 * hand.x_height;
      double top = baseline - hand.x_height + jitter;
      double bottom = baseline + jitter;
      if (rng.chance(hand.tall_rate)) {
        if (rng.chance(0.6)) top -= hand.x_height * 0.8;
        else bottom += hand.x_height * 0.7;
      }
      const Point foot{x - shear * (bottom - baseline), bottom};
      const Point head{x - shear * (top - baseline), top};
      canvas.segment(foot, head, hand.stroke_width);

      const double next_x = x + hand.advance * (1.0 + 0.08 * rng.normal());
      --left_in_word;
      if (left_in_word > 0 && rng.chance(hand.arc_rate)) {
        // Round connector from the foot of this stroke to the head of the next.
        const bool under = rng.chance(0.5);
        std::vector<Point> arc;
        const double y_lo = under ? baseline : baseline - hand.x_height;
        const double bulge = (under ? 1.0 : -1.0) * hand.x_height * 0.35;
        for (int s = 0; s <= 6; ++s) {
          const double t = s / 6.0;
          const double px = x + (next_x - x) * t;
          const double py = y_lo + bulge * std::sin(std::numbers::pi * t);
          arc.push_back({px - shear * (py - baseline), py});
        }
        canvas.polyline(arc, hand.stroke_width * 0.8);
      }
      x = next_x;
      if (left_in_word <= 0) {
        x += hand.advance * rng.uniform(0.8, 2.0);
        left_in_word = std::max(1, static_cast<int>(std::lround(hand.word_length + rng.normal())));
      }
    }
    baseline += hand.line_spacing * (1.0 + 0.03 * rng.normal());
  }
  const double noise = rng.uniform(2.0, 7.0);
  return canvas.render(hand, rng, noise);
}

}  // namespace

std::string_view tag_name(SubsetTag tag) noexcept {
  switch (tag) {
    case SubsetTag::manuscripts: return "manuscripts";
    case SubsetTag::letters_a: return "letters_a";
    case SubsetTag::letters_b: return "letters_b";
    case SubsetTag::charters: return "charters";
    case SubsetTag::synthetic: return "synthetic";
  }
  return "unknown";
}

SubsetTag parse_tag(std::string_view name) {
  for (SubsetTag t : all_tags()) {
    if (tag_name(t) == name) return t;
  }
  throw Error(Errc::unknown_tag, "unknown subset tag '" + std::string(name) + "'");
}

const std::set<SubsetTag>& all_tags() {
  static const std::set<SubsetTag> tags = {SubsetTag::manuscripts, SubsetTag::letters_a, SubsetTag::letters_b,
                                           SubsetTag::charters, SubsetTag::synthetic};
  return tags;
}

CorpusManifest::CorpusManifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].image_id, i).second) {
      throw Error(Errc::duplicate_id, "duplicate image_id '" + entries_[i].image_id + "'");
    }
  }
}

std::optional<std::size_t> CorpusManifest::find(std::string_view image_id) const {
  auto it = index_.find(std::string(image_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t CorpusManifest::index_of(std::string_view image_id) const {
  if (auto i = find(image_id)) return *i;
  throw Error(Errc::unknown_id, "unknown image_id '" + std::string(image_id) + "'");
}

std::vector<std::string> CorpusManifest::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.image_id);
  return out;
}

CorpusManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> entries;
  std::unordered_map<std::string, std::size_t> first_line;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line_no == 1 && raw.starts_with("\xEF\xBB\xBF")) raw.remove_prefix(3);
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    const auto fields = split_fields(line);
    const std::string where = "manifest line " + std::to_string(line_no);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"image_id", "path", "writer_id", "subset"}) {
        throw Error(Errc::parse, where + ": expected header 'image_id,path,writer_id,subset'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw Error(Errc::parse, where + ": expected 4 fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw Error(Errc::parse, where + ": empty field");
    }
    SubsetTag tag;
    try {
      tag = parse_tag(fields[3]);
    } catch (const Error& e) {
      throw Error(Errc::unknown_tag, where + ": " + e.what());
    }
    if (auto [it, fresh] = first_line.emplace(fields[0], line_no); !fresh) {
      throw Error(Errc::duplicate_id, where + ": duplicate image_id '" + fields[0] + "' (first on line " +
                                          std::to_string(it->second) + ")");
    }
    std::filesystem::path p(fields[1]);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    entries.push_back({fields[0], p, fields[2], tag});
  }
  if (!header_seen) throw Error(Errc::parse, "manifest is missing its header line");
  return CorpusManifest(std::move(entries));
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open manifest: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write manifest: " + path.string());
  const auto base = path.parent_path();
  out << "image_id,path,writer_id,subset\n";
  for (const auto& e : manifest.entries()) {
    std::filesystem::path p = e.path;
    if (!base.empty()) {
      const auto rel = e.path.lexically_relative(base);
      if (!rel.empty() && !rel.string().starts_with("..")) p = rel;
    }
    out << e.image_id << ',' << p.generic_string() << ',' << e.writer_id << ',' << tag_name(e.subset) << '\n';
  }
  if (!out) throw Error(Errc::io, "failed writing manifest: " + path.string());
}

std::vector<std::size_t> relevant_counts(const CorpusManifest& manifest) {
  std::unordered_map<std::string, std::size_t> pages;
  for (const auto& e : manifest.entries()) ++pages[e.writer_id];
  std::vector<std::size_t> out;
  out.reserve(manifest.size());
  for (const auto& e : manifest.entries()) out.push_back(pages[e.writer_id] - 1);
  return out;
}

std::size_t relevant_count(const CorpusManifest& manifest, std::string_view image_id) {
  const std::string& writer = manifest[manifest.index_of(image_id)].writer_id;
  std::size_t same = 0;
  for (const auto& e : manifest.entries()) same += e.writer_id == writer ? 1 : 0;
  return same - 1;
}

std::vector<std::size_t> subset_indices(const CorpusManifest& manifest, const std::set<SubsetTag>& tags) {
  if (tags.empty()) throw Error(Errc::invalid_argument, "subset selection needs at least one tag");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (tags.contains(manifest[i].subset)) out.push_back(i);
  }
  return out;
}

CorpusManifest subset_select(const CorpusManifest& manifest, const std::set<SubsetTag>& tags) {
  std::vector<ManifestEntry> entries;
  for (std::size_t i : subset_indices(manifest, tags)) entries.push_back(manifest[i]);
  return CorpusManifest(std::move(entries));
}

CorpusManifest synth_corpus(const SynthParams& params, const std::filesystem::path& out_dir, unsigned workers) {
  if (params.num_writers < 1 || params.pages_per_writer < 1 || params.num_distractors < 0) {
    throw Error(Errc::invalid_argument, "synthetic corpus needs >= 1 writer, >= 1 page per writer, >= 0 distractors");
  }
  if (params.width < 64 || params.height < 64) throw Error(Errc::invalid_argument, "synthetic pages must be >= 64x64");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error(Errc::io, "cannot create output directory: " + out_dir.string());
  }

  struct Job {
    ManifestEntry entry;
    std::uint64_t hand_seed;
    std::uint64_t page_seed;
  };
  std::vector<Job> jobs;
  const std::uint64_t base = splitmix64(params.seed);
  std::size_t serial = 0;
  auto add = [&](const std::string& writer, std::uint64_t hand_seed) {
    const std::string id = fmt::format("{}{:05d}", params.id_prefix, serial);
    jobs.push_back({{id, out_dir / (id + ".png"), writer, SubsetTag::synthetic},
                    hand_seed,
                    splitmix64(base ^ splitmix64(0x5A5A0000ull + serial))});
    ++serial;
  };
  for (int w = 0; w < params.num_writers; ++w) {
    const std::uint64_t hand_seed = splitmix64(base + 2 * static_cast<std::uint64_t>(w) + 1);
    for (int p = 0; p < params.pages_per_writer; ++p) add(fmt::format("w{:04d}", w), hand_seed);
  }
  for (int d = 0; d < params.num_distractors; ++d) {
    add(fmt::format("d{:04d}", d), splitmix64(base + 2 * static_cast<std::uint64_t>(params.num_writers + d) + 1));
  }

  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const Hand hand = draw_hand(jobs[i].hand_seed);
    save_png(render_page(hand, jobs[i].page_seed, params.width, params.height), jobs[i].entry.path);
  });

  std::vector<ManifestEntry> entries;
  entries.reserve(jobs.size());
  for (auto& j : jobs) entries.push_back(std::move(j.entry));
  CorpusManifest manifest(std::move(entries));
  write_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace wr::corpus
