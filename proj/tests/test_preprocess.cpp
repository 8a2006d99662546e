#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_support.hpp"
#include "wr/preprocess.hpp"

namespace wr::preprocess {
namespace {

using test::code_of;

GrayImage gradient(int w, int h) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint8_t>((x * 7 + y * 13) % 256);
  }
  return img;
}

// Dark dashed text lines on a light page.
GrayImage lined_page(int w, int h) {
  GrayImage img(w, h, 230);
  for (int y0 = 30; y0 + 6 < h - 30; y0 += 22) {
    for (int x = 40; x < w - 40; ++x) {
      if ((x / 9) % 4 == 3) continue;
      for (int y = y0; y < y0 + 5; ++y) img.at(x, y) = 30;
    }
  }
  return img;
}

TEST(Crop, RemovesMarginFromEverySide) {
  const auto img = gradient(1000, 800);
  const auto out = crop_border(img);
  EXPECT_EQ(out.width(), 916);
  EXPECT_EQ(out.height(), 716);
  EXPECT_EQ(out.at(0, 0), img.at(42, 42));
  EXPECT_EQ(out.at(915, 715), img.at(957, 757));
}

TEST(Crop, ZeroMarginIsIdentity) {
  const auto img = gradient(50, 40);
  EXPECT_EQ(crop_border(img, 0), img);
}

TEST(Crop, TooSmallImageIsRejected) {
  EXPECT_EQ(code_of([] { crop_border(GrayImage(80, 80)); }), Errc::dimension);
  const auto thin = crop_border(GrayImage(85, 200));
  EXPECT_EQ(thin.width(), 1);
  EXPECT_EQ(thin.height(), 116);
  EXPECT_EQ(code_of([] { crop_border(GrayImage(100, 100), -1); }), Errc::invalid_argument);
}

TEST(Crop, Composes) {
  const auto img = gradient(300, 250);
  EXPECT_EQ(crop_border(crop_border(img, 10), 20), crop_border(img, 30));
}

TEST(Resize, DownscalesLongSide) {
  const auto out = resize_max_dim(GrayImage(4000, 3000, 90));
  EXPECT_EQ(out.width(), 2000);
  EXPECT_EQ(out.height(), 1500);
  EXPECT_EQ(out.at(1000, 700), 90);
}

TEST(Resize, SmallImagesUnchangedAndIdempotent) {
  const auto img = gradient(1999, 1200);
  EXPECT_EQ(resize_max_dim(img), img);
  const auto exact = gradient(2000, 10);
  EXPECT_EQ(resize_max_dim(exact), exact);
  const auto once = resize_max_dim(gradient(3001, 2999));
  EXPECT_EQ(std::max(once.width(), once.height()), 2000);
  EXPECT_EQ(resize_max_dim(once), once);
}

TEST(Otsu, TwoValuedImage) {
  GrayImage img(4, 1, std::vector<std::uint8_t>{0, 0, 255, 255});
  const auto r = otsu_binarize(img);
  EXPECT_FALSE(r.degenerate);
  EXPECT_EQ(r.threshold, 0);
  EXPECT_TRUE(r.foreground.at(0, 0));
  EXPECT_FALSE(r.foreground.at(2, 0));
  EXPECT_EQ(r.foreground.count(), 2u);
}

TEST(Otsu, ConstantImageIsDegenerate) {
  const auto r = otsu_binarize(GrayImage(10, 10, 128));
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.foreground.count(), 0u);
}

TEST(Otsu, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> side(1, 8);
    const int w = side(rng);
    const int h = side(rng);
    GrayImage img = test::random_image(w, h, rng);
    if (trial % 2 == 1) {
      // Few distinct levels make ties common.
      std::uniform_int_distribution<int> pick(0, 3);
      const std::uint8_t palette[] = {10, 60, 110, 160};
      for (auto& p : img.pixels()) p = palette[pick(rng)];
    }
    const std::vector<std::uint8_t> px(img.pixels().begin(), img.pixels().end());
    const auto want = oracle::otsu_bruteforce(px);
    const auto got = otsu_binarize(img);
    ASSERT_EQ(got.degenerate, want.degenerate) << "trial " << trial;
    if (!want.degenerate) ASSERT_EQ(got.threshold, want.threshold) << "trial " << trial;
  }
}

TEST(Otsu, InvariantUnderPixelDuplication) {
  std::mt19937_64 rng(9);
  const auto img = test::random_image(7, 5, rng);
  GrayImage doubled(14, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 7; ++x) {
      doubled.at(x, y) = img.at(x, y);
      doubled.at(x + 7, y) = img.at(x, y);
    }
  }
  EXPECT_EQ(otsu_binarize(img).threshold, otsu_binarize(doubled).threshold);
}

TEST(Otsu, ComplementSplitsTheSameWay) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto img = test::random_image(6, 6, rng);
    GrayImage inv = img;
    for (auto& p : inv.pixels()) p = static_cast<std::uint8_t>(255 - p);
    const auto a = otsu_binarize(img);
    const auto b = otsu_binarize(inv);
    if (a.degenerate) continue;
    // The same partition of the pixels must be optimal, possibly reached by a
    // different threshold when there are empty bins between the classes.
    std::size_t complementary = 0;
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 6; ++x) complementary += a.foreground.at(x, y) != b.foreground.at(x, y) ? 1 : 0;
    }
    const auto fg_a = a.foreground.count();
    const auto fg_b = b.foreground.count();
    EXPECT_EQ(fg_a + fg_b, 36u);
    EXPECT_EQ(complementary, 36u) << "trial " << trial;
  }
}

TEST(Otsu, HistogramEntryPoint) {
  std::uint64_t hist[256] = {};
  hist[3] = 5;
  hist[200] = 7;
  std::uint8_t t = 0;
  ASSERT_TRUE(otsu_threshold(hist, t));
  EXPECT_EQ(t, 3);
  std::uint64_t flat[256] = {};
  flat[17] = 9;
  EXPECT_FALSE(otsu_threshold(flat, t));
  EXPECT_EQ(t, 17);
}

TEST(Deskew, StraightPageStaysPut) {
  const auto page = lined_page(400, 300);
  const auto r = deskew_projection(page);
  EXPECT_DOUBLE_EQ(r.angle_deg, 0.0);
  EXPECT_EQ(r.image, page);
}

TEST(Deskew, UndoesKnownRotation) {
  const auto page = lined_page(400, 300);
  for (double skew : {2.0, -3.5}) {
    const auto tilted = rotate(page, skew, 230);
    const auto r = deskew_projection(tilted);
    EXPECT_NEAR(r.angle_deg, -skew, 0.1 + 1e-9) << "skew " << skew;
  }
}

TEST(Deskew, BlankPageIsUntouched) {
  const GrayImage blank(120, 90, 255);
  const auto r = deskew_projection(blank);
  EXPECT_DOUBLE_EQ(r.angle_deg, 0.0);
  EXPECT_EQ(r.image, blank);
}

TEST(Rotate, ZeroAngleAndMedian) {
  const auto img = gradient(31, 17);
  EXPECT_EQ(rotate(img, 0.0, 0), img);
  EXPECT_EQ(median_intensity(GrayImage(3, 1, std::vector<std::uint8_t>{9, 1, 5})), 5);
}

TEST(Dilate, SquareNeighbourhood) {
  BinaryImage m(7, 7);
  m.set(3, 3, true);
  const auto d = dilate(m, 2);
  EXPECT_EQ(d.count(), 25u);
  EXPECT_TRUE(d.at(1, 5));
  EXPECT_FALSE(d.at(0, 3));
  EXPECT_EQ(dilate(m, 0), m);
}

void write_ppm(const std::filesystem::path& p, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  std::ofstream out(p, std::ios::binary);
  out << "P6\n" << w << " " << h << "\n255\n";
  for (int i = 0; i < w * h; ++i) out.put(static_cast<char>(r)).put(static_cast<char>(g)).put(static_cast<char>(b));
}

TEST(LoadGray, ColorUsesLumaWeights) {
  test::TempDir dir("load");
  write_ppm(dir / "red.ppm", 3, 2, 255, 0, 0);
  write_ppm(dir / "white.ppm", 2, 2, 255, 255, 255);
  const auto red = load_gray(dir / "red.ppm");
  EXPECT_EQ(red.width(), 3);
  EXPECT_EQ(red.height(), 2);
  EXPECT_EQ(red.at(1, 1), 76);
  EXPECT_EQ(load_gray(dir / "white.ppm").at(0, 0), 255);
}

TEST(LoadGray, GrayPngRoundTrip) {
  test::TempDir dir("load");
  std::mt19937_64 rng(2);
  const auto img = test::random_image(23, 11, rng);
  save_png(img, dir / "g.png");
  EXPECT_EQ(load_gray(dir / "g.png"), img);
  EXPECT_EQ(code_of([&] { load_gray(dir / "missing.png"); }), Errc::io);
}

}  // namespace
}  // namespace wr::preprocess
