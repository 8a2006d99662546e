#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace wr {

/// Row-major 8-bit grayscale raster. width and height are always >= 1.
class GrayImage {
 public:
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }
  std::span<const std::uint8_t> row(int y) const {
    return std::span(pixels_).subspan(index(0, y), static_cast<std::size_t>(width_));
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

/// Row-major foreground mask; true marks ink.
class BinaryImage {
 public:
  BinaryImage(int width, int height, bool fill = false);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool at(int x, int y) const { return pixels_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { pixels_[index(x, y)] = v ? 1 : 0; }
  std::size_t count() const noexcept;

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

/// Decodes any raster format the image codec understands. Color input is
/// converted with ITU-R 601 luma weights (0.299, 0.587, 0.114), rounded to
/// nearest; 16-bit input is reduced to 8 bits.
GrayImage load_gray(const std::filesystem::path& path);

/// Writes a lossless PNG.
void save_png(const GrayImage& img, const std::filesystem::path& path);

}  // namespace wr
