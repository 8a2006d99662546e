#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wr/image.hpp"

namespace wr::descriptor {

enum class Sampling { bilinear, nearest };

struct LbpConfig {
  std::vector<int> radii = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  int neighbors = 8;
  int bins = 256;
  Sampling sampling = Sampling::bilinear;
  // Pool only over the Otsu foreground dilated by mask_dilation pixels.
  bool use_mask = false;
  int mask_dilation = 3;

  std::size_t length() const noexcept { return radii.size() * static_cast<std::size_t>(bins); }
  /// Throws invalid_argument unless bins == 2^neighbors, neighbors == 8 and
  /// radii are strictly increasing and >= 1.
  void validate() const;
};

/// LBP codes of the valid region: pixels at distance >= radius from every
/// border, so the map is (w - 2r) x (h - 2r). Code (x, y) belongs to image
/// pixel (x + radius, y + radius).
struct CodeMap {
  int radius = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> codes;

  std::uint8_t at(int x, int y) const {
    return codes[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

/// Neighbour k sits at angle k*45 degrees, counterclockwise from the +x axis
/// as the image is displayed (y grows downward). Bit k is set iff the sampled
/// neighbour is >= the centre pixel.
CodeMap lbp_code_map(const GrayImage& img, int radius, Sampling sampling = Sampling::bilinear);

struct PooledHistogram {
  std::vector<double> values;  // 256 bins, L1-normalized or all zero
  bool empty = false;
};

/// Histogram of the code map over its valid pixels, restricted to `mask`
/// when given (mask has the source image's dimensions).
PooledHistogram pool_histogram(const CodeMap& codes, const BinaryImage* mask = nullptr);

struct TextureDescriptor {
  std::string image_id;
  std::vector<double> values;
  std::vector<bool> empty_slices;  // one flag per radius
};

/// Per-radius pooled histograms concatenated in ascending radius order.
TextureDescriptor extract_descriptor(const GrayImage& img, const LbpConfig& cfg = {}, std::string image_id = {});

/// Pluggable page-descriptor interface. Other texture or codebook methods can
/// be added by implementing it.
class DescriptorExtractor {
 public:
  virtual ~DescriptorExtractor() = default;
  virtual std::string name() const = 0;
  virtual std::size_t length() const = 0;
  virtual TextureDescriptor extract(const GrayImage& img, std::string image_id) const = 0;
};

class LbpExtractor final : public DescriptorExtractor {
 public:
  explicit LbpExtractor(LbpConfig cfg = {});

  std::string name() const override { return "lbp"; }
  std::size_t length() const override { return cfg_.length(); }
  TextureDescriptor extract(const GrayImage& img, std::string image_id) const override;

  const LbpConfig& config() const noexcept { return cfg_; }

 private:
  LbpConfig cfg_;
};

/// Row-major matrix of feature vectors, one row per image in manifest order.
/// Used for both descriptors and embeddings.
struct FeatureSet {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<double> data;

  std::size_t size() const noexcept { return ids.size(); }
  std::span<const double> row(std::size_t i) const { return std::span(data).subspan(i * dim, dim); }
  std::span<double> row(std::size_t i) { return std::span(data).subspan(i * dim, dim); }
  void append(const std::string& id, std::span<const double> values);
};

/// Binary store: magic "WRDESC1", u32 dim, u32 count, then count*dim
/// little-endian float64 values. Ids go to a sidecar "<path>.ids" text file,
/// one per line.
void write_feature_store(const FeatureSet& set, const std::filesystem::path& path);
FeatureSet read_feature_store(const std::filesystem::path& path);

std::filesystem::path ids_sidecar(const std::filesystem::path& store);

}  // namespace wr::descriptor
