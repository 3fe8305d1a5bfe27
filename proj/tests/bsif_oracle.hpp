#pragma once

#include <cstdint>

#include "ocular/bsif.hpp"

namespace ocular::testing {

// Per-pixel direct correlation at every pixel, replicate borders, window
// values taken relative to the window centre. No padded buffers, no shared
// code path with the library's filtering loop.
inline CodeImage brute_force_bsif(const GrayImage& img, const FilterBank& bank) {
  const int k = bank.k();
  const int half = k / 2;
  CodeImage out(img.width(), img.height(), 1 << bank.n());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      unsigned code = 0;
      for (int f = 0; f < bank.n(); ++f) {
        double acc = 0.0;
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) {
            const int sx = std::min(std::max(x + dx - half, 0), img.width() - 1);
            const int sy = std::min(std::max(y + dy - half, 0), img.height() - 1);
            acc += bank.filter(f)[static_cast<std::size_t>(dy * k + dx)] *
                   static_cast<double>(img(sx, sy) - img(x, y));
          }
        code = code * 2 + (acc > 0.0 ? 1 : 0);
      }
      out(x, y) = static_cast<std::uint16_t>(code);
    }
  return out;
}

}  // namespace ocular::testing
