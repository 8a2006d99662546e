#include "wr/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <opencv2/imgcodecs.hpp>

#include "wr/error.hpp"

namespace wr {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(Errc::dimension,
                "image dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
  }
}

std::uint8_t luma601(double r, double g, double b) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(0.299 * r + 0.587 * g + 0.114 * b), 0L, 255L));
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(Errc::dimension, "pixel count does not match " + std::to_string(width) + "x" + std::to_string(height));
  }
}

BinaryImage::BinaryImage(int width, int height, bool fill) : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
}

std::size_t BinaryImage::count() const noexcept {
  return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), std::uint8_t{1}));
}

GrayImage load_gray(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::io, "no such image: " + path.string());
  // IMREAD_UNCHANGED keeps the channel layout so the luma conversion is ours.
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED | cv::IMREAD_IGNORE_ORIENTATION);
  if (raw.empty()) throw Error(Errc::io, "cannot decode image: " + path.string());

  double scale = 1.0;
  switch (raw.depth()) {
    case CV_8U: break;
    case CV_16U: scale = 255.0 / 65535.0; break;
    default: throw Error(Errc::io, "unsupported sample depth in " + path.string());
  }

  GrayImage out(raw.cols, raw.rows);
  const int channels = raw.channels();
  for (int y = 0; y < raw.rows; ++y) {
    for (int x = 0; x < raw.cols; ++x) {
      auto sample = [&](int c) -> double {
        return raw.depth() == CV_8U ? raw.ptr<std::uint8_t>(y)[x * channels + c]
                                    : raw.ptr<std::uint16_t>(y)[x * channels + c] * scale;
      };
      if (channels == 1 || channels == 2) {
        out.at(x, y) = static_cast<std::uint8_t>(std::lround(sample(0)));
      } else {
        // OpenCV stores BGR(A).
        out.at(x, y) = luma601(sample(2), sample(1), sample(0));
      }
    }
  }
  return out;
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
  cv::Mat mat(img.height(), img.width(), CV_8UC1, const_cast<std::uint8_t*>(img.pixels().data()));
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat, {cv::IMWRITE_PNG_COMPRESSION, 6});
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) throw Error(Errc::io, "cannot write image: " + path.string());
}

}  // namespace wr
