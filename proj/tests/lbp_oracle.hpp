#pragma once

#include <algorithm>
#include <array>

#include "ocular/image.hpp"

namespace ocular::testing {

// Independent label assignment: walk the 8 circular bit pairs one by one.
inline std::array<int, 256> oracle_labels() {
  std::array<int, 256> labels{};
  int next = 0;
  for (int p = 0; p < 256; ++p) {
    int transitions = 0;
    for (int b = 0; b < 8; ++b) {
      const int cur = (p >> b) & 1;
      const int nxt = (p >> ((b + 1) % 8)) & 1;
      transitions += cur != nxt;
    }
    labels[static_cast<std::size_t>(p)] = transitions <= 2 ? next++ : -1;
  }
  for (auto& l : labels)
    if (l < 0) l = next;
  return labels;
}

inline std::array<long, 59> oracle_histogram(const GrayImage& img) {
  static const auto labels = oracle_labels();
  // clockwise from top-left, MSB first
  const int ox[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  const int oy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  std::array<long, 59> hist{};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      int raw = 0;
      for (int i = 0; i < 8; ++i) {
        const int sx = std::min(std::max(x + ox[i], 0), img.width() - 1);
        const int sy = std::min(std::max(y + oy[i], 0), img.height() - 1);
        if (img(sx, sy) >= img(x, y)) raw |= 1 << (7 - i);
      }
      ++hist[static_cast<std::size_t>(labels[static_cast<std::size_t>(raw)])];
    }
  return hist;
}

}  // namespace ocular::testing
