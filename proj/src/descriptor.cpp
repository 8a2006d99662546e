#include "wr/descriptor.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "wr/error.hpp"
#include "wr/preprocess.hpp"

namespace wr::descriptor {

static_assert(std::endian::native == std::endian::little, "binary stores assume a little-endian host");

namespace {

constexpr char kDescMagic[7] = {'W', 'R', 'D', 'E', 'S', 'C', '1'};

struct NeighborOffset {
  int ix;     // floor of the x offset
  int iy;     // floor of the y offset
  double fx;  // fractional parts, 0 on grid
  double fy;
};

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

std::array<NeighborOffset, 8> neighbor_offsets(int radius, Sampling sampling) {
  std::array<NeighborOffset, 8> out{};
  for (int k = 0; k < 8; ++k) {
    const double angle = k * std::numbers::pi / 4.0;
    // Counterclockwise on screen means negative y.
    double dx = snap(radius * std::cos(angle));
    double dy = snap(-radius * std::sin(angle));
    if (sampling == Sampling::nearest) {
      dx = std::round(dx);
      dy = std::round(dy);
    }
    const double fx = std::floor(dx);
    const double fy = std::floor(dy);
    out[k] = {static_cast<int>(fx), static_cast<int>(fy), dx - fx, dy - fy};
  }
  return out;
}

}  // namespace

void LbpConfig::validate() const {
  if (neighbors != 8) throw Error(Errc::invalid_argument, "only 8-neighbour LBP is supported");
  if (bins != (1 << neighbors)) throw Error(Errc::invalid_argument, "bins must equal 2^neighbors");
  if (radii.empty()) throw Error(Errc::invalid_argument, "at least one LBP radius is required");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < 1) throw Error(Errc::invalid_argument, "LBP radii must be >= 1");
    if (i > 0 && radii[i] <= radii[i - 1]) throw Error(Errc::invalid_argument, "LBP radii must be strictly increasing");
  }
  if (mask_dilation < 0) throw Error(Errc::invalid_argument, "mask dilation must be non-negative");
}

CodeMap lbp_code_map(const GrayImage& img, int radius, Sampling sampling) {
  if (radius < 1) throw Error(Errc::invalid_argument, "LBP radius must be >= 1");
  if (img.width() <= 2 * radius || img.height() <= 2 * radius) {
    throw Error(Errc::dimension, "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                                     " too small for LBP radius " + std::to_string(radius));
  }
  const auto offsets = neighbor_offsets(radius, sampling);
  CodeMap map;
  map.radius = radius;
  map.width = img.width() - 2 * radius;
  map.height = img.height() - 2 * radius;
  map.codes.resize(static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height));

  const std::uint8_t* px = img.pixels().data();
  const std::ptrdiff_t stride = img.width();
  for (int y = 0; y < map.height; ++y) {
    const int cy = y + radius;
    std::uint8_t* out = map.codes.data() + static_cast<std::ptrdiff_t>(y) * map.width;
    for (int x = 0; x < map.width; ++x) {
      const int cx = x + radius;
      const int centre = px[cy * stride + cx];
      unsigned code = 0;
      for (int k = 0; k < 8; ++k) {
        const NeighborOffset& o = offsets[k];
        const std::uint8_t* p = px + (cy + o.iy) * stride + (cx + o.ix);
        bool set;
        if (o.fx == 0.0 && o.fy == 0.0) {
          set = p[0] >= centre;
        } else {
          // Interpolate the difference to the centre so constant regions and
          // global intensity shifts give bit-identical comparisons.
          const int p00 = p[0];
          const int p10 = o.fx > 0.0 ? p[1] : p00;
          const int p01 = o.fy > 0.0 ? p[stride] : p00;
          const int p11 = o.fy > 0.0 ? (o.fx > 0.0 ? p[stride + 1] : p01) : p10;
          const double a = p00 - centre;
          const double top = a + o.fx * (p10 - p00);
          const double bottom = (a + (p01 - p00)) + o.fx * (p11 - p01);
          set = top + o.fy * (bottom - top) >= 0.0;
        }
        code |= static_cast<unsigned>(set) << k;
      }
      out[x] = static_cast<std::uint8_t>(code);
    }
  }
  return map;
}

PooledHistogram pool_histogram(const CodeMap& codes, const BinaryImage* mask) {
  PooledHistogram hist;
  hist.values.assign(256, 0.0);
  const int r = codes.radius;
  if (mask && (mask->width() != codes.width + 2 * r || mask->height() != codes.height + 2 * r)) {
    throw Error(Errc::dimension, "mask dimensions do not match the code map's source image");
  }
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;
  for (int y = 0; y < codes.height; ++y) {
    for (int x = 0; x < codes.width; ++x) {
      if (mask && !mask->at(x + r, y + r)) continue;
      ++counts[codes.at(x, y)];
      ++total;
    }
  }
  if (total == 0) {
    hist.empty = true;
    return hist;
  }
  for (int b = 0; b < 256; ++b) hist.values[b] = static_cast<double>(counts[b]) / static_cast<double>(total);
  return hist;
}

TextureDescriptor extract_descriptor(const GrayImage& img, const LbpConfig& cfg, std::string image_id) {
  cfg.validate();
  const int max_radius = cfg.radii.back();
  if (img.width() <= 2 * max_radius || img.height() <= 2 * max_radius) {
    throw Error(Errc::dimension, "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                                     " too small for LBP radius " + std::to_string(max_radius));
  }

  std::optional<BinaryImage> mask;
  if (cfg.use_mask) {
    mask = preprocess::dilate(preprocess::otsu_binarize(img).foreground, cfg.mask_dilation);
  }

  TextureDescriptor desc;
  desc.image_id = std::move(image_id);
  desc.values.reserve(cfg.length());
  for (int radius : cfg.radii) {
    const PooledHistogram h = pool_histogram(lbp_code_map(img, radius, cfg.sampling), mask ? &*mask : nullptr);
    desc.values.insert(desc.values.end(), h.values.begin(), h.values.end());
    desc.empty_slices.push_back(h.empty);
  }
  return desc;
}

LbpExtractor::LbpExtractor(LbpConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

TextureDescriptor LbpExtractor::extract(const GrayImage& img, std::string image_id) const {
  return extract_descriptor(img, cfg_, std::move(image_id));
}

void FeatureSet::append(const std::string& id, std::span<const double> values) {
  if (ids.empty() && data.empty()) dim = values.size();
  if (values.size() != dim) {
    throw Error(Errc::dimension, "feature length " + std::to_string(values.size()) + " does not match set dimension " +
                                     std::to_string(dim));
  }
  ids.push_back(id);
  data.insert(data.end(), values.begin(), values.end());
}

std::filesystem::path ids_sidecar(const std::filesystem::path& store) {
  auto p = store;
  p += ".ids";
  return p;
}

void write_feature_store(const FeatureSet& set, const std::filesystem::path& path) {
  if (set.data.size() != set.ids.size() * set.dim) throw Error(Errc::dimension, "feature set payload size mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write feature store: " + path.string());
  const auto dim = static_cast<std::uint32_t>(set.dim);
  const auto count = static_cast<std::uint32_t>(set.ids.size());
  out.write(kDescMagic, sizeof kDescMagic);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  out.write(reinterpret_cast<const char*>(set.data.data()), static_cast<std::streamsize>(set.data.size() * sizeof(double)));
  if (!out) throw Error(Errc::io, "failed writing feature store: " + path.string());

  std::ofstream ids(ids_sidecar(path), std::ios::trunc);
  if (!ids) throw Error(Errc::io, "cannot write id index: " + ids_sidecar(path).string());
  for (const auto& id : set.ids) ids << id << '\n';
}

FeatureSet read_feature_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open feature store: " + path.string());
  char magic[sizeof kDescMagic];
  std::uint32_t dim = 0;
  std::uint32_t count = 0;
  if (!in.read(magic, sizeof magic)) throw Error(Errc::truncated, "feature store header truncated: " + path.string());
  if (std::memcmp(magic, kDescMagic, sizeof magic) != 0) throw Error(Errc::bad_magic, "not a feature store: " + path.string());
  if (!in.read(reinterpret_cast<char*>(&dim), sizeof dim) || !in.read(reinterpret_cast<char*>(&count), sizeof count)) {
    throw Error(Errc::truncated, "feature store header truncated: " + path.string());
  }
  FeatureSet set;
  set.dim = dim;
  set.data.resize(static_cast<std::size_t>(dim) * count);
  if (!in.read(reinterpret_cast<char*>(set.data.data()), static_cast<std::streamsize>(set.data.size() * sizeof(double)))) {
    throw Error(Errc::truncated, "feature store payload truncated: " + path.string());
  }

  std::ifstream ids(ids_sidecar(path));
  if (!ids) throw Error(Errc::io, "missing id index: " + ids_sidecar(path).string());
  for (std::string line; std::getline(ids, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) set.ids.push_back(line);
  }
  if (set.ids.size() != count) {
    throw Error(Errc::id_mismatch, "id index has " + std::to_string(set.ids.size()) + " entries, store has " +
                                       std::to_string(count));
  }
  return set;
}

}  // namespace wr::descriptor
