#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "ocular/code_image.hpp"
#include "ocular/image.hpp"

namespace ocular {

struct LpqConfig {
  int window = 7;

  void validate() const {
    if (window < 3 || window % 2 == 0) throw DataError("LPQ window must be odd and >= 3");
  }
  double frequency() const noexcept { return 1.0 / window; }
};

// Frequencies in units of 1/window: (1,0), (0,1), (1,1), (1,-1).
inline constexpr std::array<std::array<int, 2>, 4> kLpqFrequencies{{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};

// Windowed DFT at the four LPQ frequencies for the window centred at (x, y).
// Pixels enter as window_count * value - window_sum, so a flat window gives
// exactly zero.
inline std::array<std::complex<double>, 4> lpq_coefficients(const GrayImage& img, int x, int y, const LpqConfig& cfg) {
  const int r = cfg.window / 2;
  const int w = cfg.window;
  std::int64_t sum = 0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) sum += img.clamped(x + dx, y + dy);
  const std::int64_t count = static_cast<std::int64_t>(w) * w;

  std::array<std::complex<double>, 4> f{};
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double v = static_cast<double>(count * img.clamped(x + dx, y + dy) - sum);
      for (std::size_t i = 0; i < 4; ++i) {
        const int m = kLpqFrequencies[i][0] * dx + kLpqFrequencies[i][1] * dy;
        const double angle = -2.0 * std::numbers::pi * m / w;
        f[i] += v * std::complex<double>(std::cos(angle), std::sin(angle));
      }
    }
  return f;
}

// 8 bits [Re F1 >= 0, Im F1 >= 0, ..., Im F4 >= 0], first most significant.
inline unsigned lpq_quantize(const std::array<std::complex<double>, 4>& f) noexcept {
  unsigned code = 0;
  for (const auto& c : f) {
    code = (code << 1) | (c.real() >= 0.0 ? 1u : 0u);
    code = (code << 1) | (c.imag() >= 0.0 ? 1u : 0u);
  }
  return code;
}

inline CodeImage lpq_code_image(const GrayImage& img, const LpqConfig& cfg = {}) {
  cfg.validate();
  if (img.width() < cfg.window || img.height() < cfg.window)
    throw DataError("image smaller than the LPQ window");
  const int r = cfg.window / 2;
  const int w = cfg.window;
  const int width = img.width();
  const int height = img.height();
  const std::int64_t count = static_cast<std::int64_t>(w) * w;

  // Phasor table indexed by (frequency, dy, dx).
  std::vector<std::complex<double>> phasor(4 * static_cast<std::size_t>(w) * w);
  for (std::size_t i = 0; i < 4; ++i)
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const int m = kLpqFrequencies[i][0] * dx + kLpqFrequencies[i][1] * dy;
        const double angle = -2.0 * std::numbers::pi * m / w;
        phasor[(i * w + (dy + r)) * w + (dx + r)] = {std::cos(angle), std::sin(angle)};
      }

  // Replicate-padded copy plus a summed-area table for window sums.
  const int pw = width + 2 * r;
  const int ph = height + 2 * r;
  std::vector<std::int64_t> padded(static_cast<std::size_t>(pw) * ph);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) padded[static_cast<std::size_t>(y) * pw + x] = img.clamped(x - r, y - r);
  std::vector<std::int64_t> sat(static_cast<std::size_t>(pw + 1) * (ph + 1), 0);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      sat[static_cast<std::size_t>(y + 1) * (pw + 1) + x + 1] = padded[static_cast<std::size_t>(y) * pw + x] +
                                                                sat[static_cast<std::size_t>(y) * (pw + 1) + x + 1] +
                                                                sat[static_cast<std::size_t>(y + 1) * (pw + 1) + x] -
                                                                sat[static_cast<std::size_t>(y) * (pw + 1) + x];
  auto box = [&](int x0, int y0) {  // window with top-left (x0, y0) in padded coords
    const auto at = [&](int x, int y) { return sat[static_cast<std::size_t>(y) * (pw + 1) + x]; };
    return at(x0 + w, y0 + w) - at(x0, y0 + w) - at(x0 + w, y0) + at(x0, y0);
  };

  CodeImage out(width, height, 256);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::int64_t sum = box(x, y);
      std::array<std::complex<double>, 4> f{};
      for (int dy = 0; dy < w; ++dy)
        for (int dx = 0; dx < w; ++dx) {
          const double v = static_cast<double>(count * padded[static_cast<std::size_t>(y + dy) * pw + x + dx] - sum);
          if (v == 0.0) continue;
          for (std::size_t i = 0; i < 4; ++i) f[i] += v * phasor[(i * w + dy) * w + dx];
        }
      out(x, y) = static_cast<std::uint16_t>(lpq_quantize(f));
    }
  return out;
}

}  // namespace ocular
