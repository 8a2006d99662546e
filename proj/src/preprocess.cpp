#include "wr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "wr/error.hpp"

namespace wr::preprocess {

namespace {

using u128 = unsigned __int128;

// Keeps the squared numerator of the Otsu criterion inside 128 bits.
constexpr std::uint64_t kMaxOtsuPixels = 100'000'000;

cv::Mat as_mat(const GrayImage& img) {
  return cv::Mat(img.height(), img.width(), CV_8UC1, const_cast<std::uint8_t*>(img.pixels().data()));
}

GrayImage from_mat(const cv::Mat& mat) {
  GrayImage out(mat.cols, mat.rows);
  for (int y = 0; y < mat.rows; ++y) {
    std::copy_n(mat.ptr<std::uint8_t>(y), mat.cols, out.pixels().begin() + static_cast<std::ptrdiff_t>(y) * mat.cols);
  }
  return out;
}

// Sign of a/b - c/d for b, d > 0, by comparing continued-fraction expansions.
int compare_fractions(u128 a, u128 b, u128 c, u128 d) {
  int sign = 1;
  for (;;) {
    const u128 qa = a / b;
    const u128 qc = c / d;
    if (qa != qc) return qa < qc ? -sign : sign;
    const u128 ra = a % b;
    const u128 rc = c % d;
    if (ra == 0 && rc == 0) return 0;
    if (ra == 0) return -sign;
    if (rc == 0) return sign;
    // ra/b vs rc/d has the opposite sign of b/ra vs d/rc.
    a = b;
    b = ra;
    c = d;
    d = rc;
    sign = -sign;
  }
}

void histogram_of(const GrayImage& img, std::uint64_t (&hist)[256]) {
  std::fill(std::begin(hist), std::end(hist), 0);
  for (std::uint8_t v : img.pixels()) ++hist[v];
}

}  // namespace

GrayImage crop_border(const GrayImage& img, int margin) {
  if (margin < 0) throw Error(Errc::invalid_argument, "crop margin must be non-negative");
  if (img.width() <= 2 * margin || img.height() <= 2 * margin) {
    throw Error(Errc::dimension, "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                                     " too small for crop margin " + std::to_string(margin));
  }
  if (margin == 0) return img;
  const int w = img.width() - 2 * margin;
  const int h = img.height() - 2 * margin;
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    auto src = img.row(y + margin).subspan(static_cast<std::size_t>(margin), static_cast<std::size_t>(w));
    std::copy(src.begin(), src.end(), out.pixels().begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  return out;
}

GrayImage resize_max_dim(const GrayImage& img, int target) {
  if (target < 1) throw Error(Errc::invalid_argument, "resize target must be >= 1");
  const int major = std::max(img.width(), img.height());
  if (major <= target) return img;
  const double scale = static_cast<double>(target) / major;
  auto scaled = [&](int side) {
    return side == major ? target : std::max(1, static_cast<int>(std::lround(side * scale)));
  };
  cv::Mat dst;
  cv::resize(as_mat(img), dst, cv::Size(scaled(img.width()), scaled(img.height())), 0, 0, cv::INTER_AREA);
  return from_mat(dst);
}

bool otsu_threshold(const std::uint64_t (&histogram)[256], std::uint8_t& threshold) {
  u128 total = 0;
  u128 total_sum = 0;
  for (int v = 0; v < 256; ++v) {
    total += histogram[v];
    total_sum += static_cast<u128>(histogram[v]) * static_cast<u128>(v);
  }
  if (total > kMaxOtsuPixels) throw Error(Errc::dimension, "image too large for exact Otsu thresholding");

  // Between-class variance is proportional to (N*S0 - n0*S)^2 / (n0*n1).
  bool found = false;
  u128 best_num = 0;
  u128 best_den = 1;
  u128 n0 = 0;
  u128 s0 = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += histogram[t];
    s0 += static_cast<u128>(histogram[t]) * static_cast<u128>(t);
    const u128 n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const u128 lhs = total * s0;
    const u128 rhs = n0 * total_sum;
    const u128 diff = lhs > rhs ? lhs - rhs : rhs - lhs;
    const u128 num = diff * diff;
    const u128 den = n0 * n1;
    if (num == 0) continue;
    if (!found || compare_fractions(num, den, best_num, best_den) > 0) {
      found = true;
      best_num = num;
      best_den = den;
      threshold = static_cast<std::uint8_t>(t);
    }
  }
  if (!found) {
    threshold = 0;
    for (int v = 0; v < 256; ++v) {
      if (histogram[v] != 0) {
        threshold = static_cast<std::uint8_t>(v);
        break;
      }
    }
  }
  return found;
}

OtsuResult otsu_binarize(const GrayImage& img) {
  std::uint64_t hist[256];
  histogram_of(img, hist);
  OtsuResult result{0, false, BinaryImage(img.width(), img.height())};
  result.degenerate = !otsu_threshold(hist, result.threshold);
  if (result.degenerate) return result;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.at(x, y) <= result.threshold) result.foreground.set(x, y, true);
    }
  }
  return result;
}

std::uint8_t median_intensity(const GrayImage& img) {
  std::uint64_t hist[256];
  histogram_of(img, hist);
  const std::uint64_t half = (img.size() + 1) / 2;
  std::uint64_t seen = 0;
  for (int v = 0; v < 256; ++v) {
    seen += hist[v];
    if (seen >= half) return static_cast<std::uint8_t>(v);
  }
  return 255;
}

GrayImage rotate(const GrayImage& img, double angle_deg, std::uint8_t fill) {
  const cv::Point2f centre((img.width() - 1) / 2.0f, (img.height() - 1) / 2.0f);
  const cv::Mat m = cv::getRotationMatrix2D(centre, angle_deg, 1.0);
  cv::Mat dst;
  cv::warpAffine(as_mat(img), dst, m, cv::Size(img.width(), img.height()), cv::INTER_LINEAR, cv::BORDER_CONSTANT,
                 cv::Scalar(fill));
  return from_mat(dst);
}

DeskewResult deskew_projection(const GrayImage& img, const DeskewParams& params) {
  if (params.step_deg <= 0.0 || params.max_angle_deg < 0.0) {
    throw Error(Errc::invalid_argument, "deskew step must be positive and range non-negative");
  }
  const OtsuResult otsu = otsu_binarize(img);
  if (otsu.degenerate || otsu.foreground.count() == 0) return {0.0, img};

  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  std::vector<double> dx;
  std::vector<double> dy;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (otsu.foreground.at(x, y)) {
        dx.push_back(x - cx);
        dy.push_back(y - cy);
      }
    }
  }

  // One bin domain shared by every candidate, large enough for any rotation,
  // so profile variances are comparable across angles.
  const double half_diag = std::hypot(cx, cy) + 1.0;
  const int offset = static_cast<int>(std::ceil(half_diag));
  const std::size_t bins = static_cast<std::size_t>(2 * offset + 1);
  std::vector<std::uint32_t> profile(bins);

  auto profile_variance = [&](double angle_deg) {
    const double a = angle_deg * std::numbers::pi / 180.0;
    const double s = std::sin(a);
    const double c = std::cos(a);
    std::fill(profile.begin(), profile.end(), 0u);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double row = -s * dx[i] + c * dy[i];
      ++profile[static_cast<std::size_t>(std::lround(row) + offset)];
    }
    double sum_sq = 0.0;
    for (std::uint32_t h : profile) sum_sq += static_cast<double>(h) * h;
    const double mean = static_cast<double>(dx.size()) / static_cast<double>(bins);
    return sum_sq / static_cast<double>(bins) - mean * mean;
  };

  // Candidates ordered 0, +step, -step, +2step, ... so ties keep the smaller rotation.
  const int steps = static_cast<int>(std::floor(params.max_angle_deg / params.step_deg + 1e-9));
  double best_angle = 0.0;
  double best_var = profile_variance(0.0);
  for (int k = 1; k <= steps; ++k) {
    for (int sign : {1, -1}) {
      const double angle = sign * k * params.step_deg;
      const double var = profile_variance(angle);
      if (var > best_var) {
        best_var = var;
        best_angle = angle;
      }
    }
  }
  if (best_angle == 0.0) return {0.0, img};
  return {best_angle, rotate(img, best_angle, median_intensity(img))};
}

BinaryImage dilate(const BinaryImage& mask, int radius) {
  if (radius < 0) throw Error(Errc::invalid_argument, "dilation radius must be non-negative");
  if (radius == 0) return mask;
  cv::Mat src(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) src.at<std::uint8_t>(y, x) = mask.at(x, y) ? 1 : 0;
  }
  cv::Mat dst;
  cv::dilate(src, dst, cv::getStructuringElement(cv::MORPH_RECT, cv::Size(2 * radius + 1, 2 * radius + 1)));
  BinaryImage out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) out.set(x, y, dst.at<std::uint8_t>(y, x) != 0);
  }
  return out;
}

}  // namespace wr::preprocess
