#pragma once

#include <array>
#include <bit>
#include <cstdint>

#include "ocular/code_image.hpp"
#include "ocular/image.hpp"

namespace ocular {

inline constexpr int kUniformLbpLabels = 59;

// Circular 0<->1 transitions in an 8-bit pattern.
constexpr int lbp_transitions(unsigned pattern) noexcept {
  const unsigned rotated = ((pattern << 1) | (pattern >> 7)) & 0xFFu;
  return std::popcount((pattern ^ rotated) & 0xFFu);
}

// Uniform patterns (<= 2 transitions) get labels 0..57 in ascending raw
// order; every other pattern shares label 58.
constexpr std::array<std::uint8_t, 256> make_uniform_lbp_table() noexcept {
  std::array<std::uint8_t, 256> table{};
  std::uint8_t next = 0;
  for (unsigned p = 0; p < 256; ++p) table[p] = lbp_transitions(p) <= 2 ? next++ : 58;
  return table;
}

inline constexpr auto kUniformLbpTable = make_uniform_lbp_table();

// Neighbours clockwise from the top-left; the first one is the MSB.
inline constexpr std::array<std::array<int, 2>, 8> kLbpNeighbors{{
    {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}}};

inline unsigned lbp_raw_pattern(const GrayImage& img, int x, int y) noexcept {
  const auto center = img(x, y);
  unsigned pattern = 0;
  for (const auto& [dx, dy] : kLbpNeighbors) pattern = (pattern << 1) | (img.clamped(x + dx, y + dy) >= center ? 1u : 0u);
  return pattern;
}

inline CodeImage lbp_code_image(const GrayImage& img) {
  if (img.width() < 3 || img.height() < 3) throw DataError("LBP needs an image of at least 3x3");
  CodeImage out(img.width(), img.height(), kUniformLbpLabels);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(x, y) = kUniformLbpTable[lbp_raw_pattern(img, x, y)];
  return out;
}

}  // namespace ocular
