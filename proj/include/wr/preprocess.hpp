#pragma once

#include <cstdint>

#include "wr/image.hpp"

namespace wr::preprocess {

inline constexpr int kDefaultCropMargin = 42;
inline constexpr int kDefaultResizeTarget = 2000;

/// Removes `margin` pixels from every side. Requires width and height > 2*margin.
GrayImage crop_border(const GrayImage& img, int margin = kDefaultCropMargin);

/// Downscale-only: when max(w, h) > target both sides are scaled by
/// target / max(w, h) with area averaging (minor side rounded, at least 1).
/// Images already within the target are returned unchanged.
GrayImage resize_max_dim(const GrayImage& img, int target = kDefaultResizeTarget);

struct OtsuResult {
  std::uint8_t threshold = 0;
  bool degenerate = false;  // constant image; foreground is empty
  BinaryImage foreground;
};

/// Otsu threshold over the 256-bin histogram, compared in exact integer
/// arithmetic with ties going to the smallest threshold. Pixels <= threshold
/// are foreground (dark ink).
OtsuResult otsu_binarize(const GrayImage& img);

/// Otsu threshold of a histogram alone. Returns false for a degenerate
/// (single-valued or empty) histogram, leaving threshold at that value.
bool otsu_threshold(const std::uint64_t (&histogram)[256], std::uint8_t& threshold);

struct DeskewParams {
  double max_angle_deg = 10.0;
  double step_deg = 0.1;
};

struct DeskewResult {
  double angle_deg = 0.0;  // rotation applied, counterclockwise positive
  GrayImage image;
};

/// Projection-profile rotation correction. The ink mask is taken once with
/// Otsu; for every candidate angle the foreground pixel centres are rotated
/// about the image centre and binned by row, and the angle maximizing the
/// variance of that row profile wins (ties go to the smaller |angle|). The
/// image is then rotated by that angle with bilinear sampling, and uncovered
/// areas are filled with the median intensity.
DeskewResult deskew_projection(const GrayImage& img, const DeskewParams& params = {});

/// Rotates about the image centre, counterclockwise for positive angles.
/// Output keeps the input size.
GrayImage rotate(const GrayImage& img, double angle_deg, std::uint8_t fill);

std::uint8_t median_intensity(const GrayImage& img);

/// Square dilation of the foreground by `radius` pixels (Chebyshev distance).
BinaryImage dilate(const BinaryImage& mask, int radius);

}  // namespace wr::preprocess
