#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "ocular/lpq.hpp"
#include "test_util.hpp"

namespace ocular {
namespace {

using testing::random_image;

TEST(LpqTest, ConstantImageCode) {
  const auto codes = lpq_code_image(GrayImage(20, 20, 180));
  for (auto c : codes.codes()) ASSERT_EQ(c, 255);
  for (const auto& f : lpq_coefficients(GrayImage(9, 9, 180), 4, 4, {}))
    EXPECT_LT(std::abs(f), 1e-9);
}

// Hand evaluation for a 3x3 window holding one bright pixel to the right of
// centre. Centred values: 9*90 - 90 = 720 at (dx=1, dy=0), -90 elsewhere.
// F(u) = sum v(d) exp(-2 pi i m(d) / 3) with m = u . d.
//   u1 = (1,0): only columns matter. Column sums of exp weight: the -90 field
//   contributes -90 * 3 * sum_dx w(dx) = 0, so F1 = 810 * exp(-2 pi i / 3)
//   = 810 * (-1/2 - i sqrt(3)/2)           -> Re < 0, Im < 0  -> bits 0 0
//   u2 = (0,1): the bright pixel sits at dy = 0, weight 1: F2 = 810 -> 1 0?
//   Im(F2) is exactly zero up to rounding of the symmetric sine terms -> 1
//   u3 = (1,1): m = dx + dy, bright pixel m = 1: F3 = 810 * exp(-2 pi i / 3) -> 0 0
//   u4 = (1,-1): m = dx - dy, bright pixel m = 1: F4 = 810 * exp(-2 pi i / 3) -> 0 0
TEST(LpqTest, HandEvaluatedThreeByThree) {
  GrayImage img(3, 3, 0);
  img(2, 1) = 90;
  const LpqConfig cfg{3};
  const auto f = lpq_coefficients(img, 1, 1, cfg);
  const std::complex<double> w = std::polar(810.0, -2.0 * std::numbers::pi / 3.0);
  EXPECT_NEAR(f[0].real(), w.real(), 1e-9);
  EXPECT_NEAR(f[0].imag(), w.imag(), 1e-9);
  EXPECT_NEAR(f[1].real(), 810.0, 1e-9);
  EXPECT_NEAR(f[1].imag(), 0.0, 1e-9);
  EXPECT_NEAR(f[2].real(), w.real(), 1e-9);
  EXPECT_NEAR(f[2].imag(), w.imag(), 1e-9);
  EXPECT_NEAR(f[3].real(), w.real(), 1e-9);
  EXPECT_NEAR(f[3].imag(), w.imag(), 1e-9);
  // bits: Re1 Im1 Re2 Im2 Re3 Im3 Re4 Im4 = 0 0 1 ? 0 0 0 0
  const unsigned code = lpq_code_image(img, cfg)(1, 1);
  EXPECT_EQ(code & ~0x10u, 0x20u);
  EXPECT_EQ(code, lpq_quantize(f));
}

TEST(LpqTest, CodeImageAgreesWithDirectCoefficients) {
  std::mt19937_64 rng(1);
  const auto img = random_image(24, 19, rng);
  for (int window : {3, 5, 7}) {
    const LpqConfig cfg{window};
    const auto codes = lpq_code_image(img, cfg);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        ASSERT_EQ(codes(x, y), lpq_quantize(lpq_coefficients(img, x, y, cfg))) << window << ":" << x << "," << y;
  }
}

TEST(LpqTest, CodesMoveWithTheImage) {
  std::mt19937_64 rng(2);
  const auto img = random_image(40, 40, rng);
  GrayImage shifted(40, 40, 0);
  for (int y = 0; y < 40; ++y)
    for (int x = 1; x < 40; ++x) shifted(x, y) = img(x - 1, y);
  const auto a = lpq_code_image(img);
  const auto b = lpq_code_image(shifted);
  for (int y = 4; y < 36; ++y)
    for (int x = 4; x < 35; ++x) ASSERT_EQ(b(x + 1, y), a(x, y)) << x << "," << y;
}

TEST(LpqTest, RejectsBadWindows) {
  EXPECT_THROW(lpq_code_image(GrayImage(20, 20), {4}), DataError);
  EXPECT_THROW(lpq_code_image(GrayImage(20, 20), {1}), DataError);
  EXPECT_THROW(lpq_code_image(GrayImage(6, 20), {7}), DataError);
}

}  // namespace
}  // namespace ocular
