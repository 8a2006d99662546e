#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wr/descriptor.hpp"

namespace wr::retrieval {

enum class Metric { manhattan, euclidean, chi_square };

std::string_view metric_name(Metric m) noexcept;
Metric parse_metric(std::string_view name);

/// manhattan: sum |a-b|; euclidean: sqrt(sum (a-b)^2); chi_square: sum over
/// bins with a+b > 0 of (a-b)^2 / (a+b), no 1/2 factor. Accumulates in double.
double distance(std::span<const double> a, std::span<const double> b, Metric m);

/// Square matrix of float32 distances indexed in manifest order.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::vector<std::string> ids);
  DistanceMatrix(std::vector<std::string> ids, std::vector<float> values);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  float at(std::size_t i, std::size_t j) const { return values_[i * ids_.size() + j]; }
  float& at(std::size_t i, std::size_t j) { return values_[i * ids_.size() + j]; }
  std::span<const float> row(std::size_t i) const { return std::span(values_).subspan(i * size(), size()); }
  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  /// Rows and columns of `indices`, in that order.
  DistanceMatrix submatrix(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::string> ids_;
  std::vector<float> values_;
};

struct MatrixOptions {
  std::size_t tile = 256;  // rows and columns per tile
  unsigned workers = 1;
};

/// Tile-by-tile all-pairs distances. Only tiles on or above the diagonal are
/// computed; each is mirrored into the lower triangle. The diagonal is 0.
DistanceMatrix compute_distance_matrix(const descriptor::FeatureSet& embeddings, Metric m,
                                       const MatrixOptions& opts = {});

enum class MatrixFormat { binary, csv };

/// binary: magic "WRDIST1", u32 n, n ids as (u32 byte length + UTF-8), then
/// n*n row-major little-endian float32. csv: header "query_id,<ids...>" and
/// one row per query, values with 9 significant digits.
void write_matrix(const DistanceMatrix& mtx, const std::filesystem::path& path, MatrixFormat format);

/// Detects the format from the leading bytes.
DistanceMatrix read_matrix(const std::filesystem::path& path);

/// Gallery indices except q, by ascending distance; equal distances keep
/// ascending index order.
std::vector<std::size_t> rank_for_query(const DistanceMatrix& mtx, std::size_t q);

}  // namespace wr::retrieval
