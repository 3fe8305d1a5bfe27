#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ocular/error.hpp"

namespace ocular {

// Per-pixel integer texture codes in [0, cardinality).
class CodeImage {
 public:
  CodeImage(int width, int height, int cardinality)
      : width_(width), height_(height), cardinality_(cardinality),
        codes_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
    if (width < 1 || height < 1) throw DataError("code image must be at least 1x1");
    if (cardinality < 1 || cardinality > 65536) throw DataError("code cardinality out of range");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int cardinality() const noexcept { return cardinality_; }

  std::uint16_t operator()(int x, int y) const noexcept { return codes_[index(x, y)]; }
  std::uint16_t& operator()(int x, int y) noexcept { return codes_[index(x, y)]; }

  std::span<const std::uint16_t> codes() const noexcept { return codes_; }
  std::span<std::uint16_t> codes() noexcept { return codes_; }

  bool operator==(const CodeImage&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  int cardinality_;
  std::vector<std::uint16_t> codes_;
};

// Packs binary decisions into an integer, first element most significant.
inline unsigned pack_bits_msb_first(std::span<const bool> bits) noexcept {
  unsigned code = 0;
  for (bool b : bits) code = (code << 1) | (b ? 1u : 0u);
  return code;
}

}  // namespace ocular
