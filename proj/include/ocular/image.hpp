#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ocular/detail/binary_io.hpp"
#include "ocular/error.hpp"

namespace ocular {

// 8-bit single-channel raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  GrayImage(int width, int height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw DataError("pixel buffer length " + std::to_string(data_.size()) + " != " +
                      std::to_string(width) + "x" + std::to_string(height));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::uint8_t operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  std::uint8_t& operator()(int x, int y) noexcept { return data_[index(x, y)]; }

  // Replicate-edge access for coordinates outside the raster.
  std::uint8_t clamped(int x, int y) const noexcept {
    return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<const std::uint8_t> pixels() const noexcept { return data_; }
  std::span<std::uint8_t> pixels() noexcept { return data_; }

  bool operator==(const GrayImage&) const = default;

 private:
  static void check_dims(int w, int h) {
    if (w < 1 || h < 1)
      throw DataError("image dimensions must be >= 1, got " + std::to_string(w) + "x" + std::to_string(h));
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Rounds half away from zero and clamps into the 8-bit range.
inline std::uint8_t to_gray(double v) noexcept {
  const double r = std::round(v);
  if (!(r > 0.0)) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

namespace detail {

class PnmParser {
 public:
  explicit PnmParser(std::span<const std::uint8_t> bytes) : b_(bytes) {}

  // Skips whitespace and '#' comments, then reads an unsigned decimal.
  unsigned long next_uint(const char* what) {
    skip_separators();
    const std::size_t start = pos_;
    token_ = start;
    unsigned long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1'000'000'000ul) throw FormatError(std::string("value too large for ") + what, start);
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= b_.size()) throw FormatError(std::string("truncated header, expected ") + what, pos_);
      throw FormatError(std::string("expected ") + what, pos_);
    }
    return v;
  }

  std::size_t pos() const noexcept { return pos_; }
  // Offset of the first byte of the last number read.
  std::size_t token_start() const noexcept { return token_; }
  void advance(std::size_t n) noexcept { pos_ += n; }
  std::span<const std::uint8_t> bytes() const noexcept { return b_; }

 private:
  void skip_separators() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n' && b_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
  std::size_t token_ = 0;
};

}  // namespace detail

// Decodes a P5 (binary) or P2 (ASCII) graymap with maxval <= 255.
inline GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2'))
    throw FormatError("not a P5/P2 graymap (bad magic)", 0);
  const bool binary = bytes[1] == '5';
  detail::PnmParser p(bytes);
  p.advance(2);
  const auto w = p.next_uint("width");
  const std::size_t dims_at = p.token_start();
  const auto h = p.next_uint("height");
  if (w == 0 || h == 0) throw FormatError("zero image dimension", dims_at);
  if (w * h > (1ul << 31)) throw FormatError("image too large", dims_at);
  const auto maxval = p.next_uint("maxval");
  const std::size_t maxval_at = p.token_start();
  if (maxval == 0 || maxval > 255) throw FormatError("maxval " + std::to_string(maxval) + " not in [1, 255]", maxval_at);

  const std::size_t count = w * h;
  std::vector<std::uint8_t> data(count);
  if (binary) {
    // exactly one whitespace byte separates the header from the raster
    if (p.pos() >= bytes.size() || !std::isspace(bytes[p.pos()]))
      throw FormatError("missing whitespace after maxval", p.pos());
    p.advance(1);
    const std::size_t payload = p.pos();
    if (bytes.size() - payload < count) throw FormatError("truncated payload", bytes.size());
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = bytes[payload + i];
      if (data[i] > maxval) throw FormatError("sample exceeds maxval", payload + i);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = p.next_uint("sample");
      const std::size_t at = p.token_start();
      if (v > maxval) throw FormatError("sample exceeds maxval", at);
      data[i] = static_cast<std::uint8_t>(v);
    }
  }
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

inline GrayImage load_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return decode_pgm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

inline void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  detail::write_file(path, encode_pgm(img));
}

namespace detail {

// Keys cubic convolution kernel with a = -0.5 (Catmull-Rom).
inline double cubic_weight(double t) noexcept {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct CubicTaps {
  int first;  // index of the leftmost of four taps (may lie outside the raster)
  double w[4];
};

// Pixel-center aligned mapping from output index to source coordinate.
inline std::vector<CubicTaps> cubic_taps(int in_size, int out_size) {
  std::vector<CubicTaps> taps(static_cast<std::size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int o = 0; o < out_size; ++o) {
    const double src = (o + 0.5) * scale - 0.5;
    const double base = std::floor(src);
    const double frac = src - base;
    auto& t = taps[static_cast<std::size_t>(o)];
    t.first = static_cast<int>(base) - 1;
    t.w[0] = cubic_weight(frac + 1.0);
    t.w[1] = cubic_weight(frac);
    t.w[2] = cubic_weight(1.0 - frac);
    t.w[3] = cubic_weight(2.0 - frac);
  }
  return taps;
}

}  // namespace detail

// Bicubic resampling with replicated borders.
inline GrayImage resize_bicubic(const GrayImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw DataError("resize target must be at least 1x1");
  const int in_w = img.width();
  const int in_h = img.height();
  const auto tx = detail::cubic_taps(in_w, out_w);
  const auto ty = detail::cubic_taps(in_h, out_h);

  std::vector<double> rows(static_cast<std::size_t>(in_h) * out_w);
  for (int y = 0; y < in_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const auto& t = tx[static_cast<std::size_t>(x)];
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.w[k] * img.clamped(t.first + k, y);
      rows[static_cast<std::size_t>(y) * out_w + x] = acc;
    }
  }
  GrayImage out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    const auto& t = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        const int sy = std::clamp(t.first + k, 0, in_h - 1);
        acc += t.w[k] * rows[static_cast<std::size_t>(sy) * out_w + x];
      }
      out(x, y) = to_gray(acc);
    }
  }
  return out;
}

class BlurConfig {
 public:
  explicit BlurConfig(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DataError("blur sigma must be > 0");
  }
  double sigma() const noexcept { return sigma_; }
  // ceil(3 sigma), at least one pixel
  int kernel_radius() const noexcept { return std::max(1, static_cast<int>(std::ceil(3.0 * sigma_))); }

 private:
  double sigma_;
};

// Sampled Gaussian at integer offsets -r..r, L1-normalized.
inline std::vector<double> gaussian_kernel(const BlurConfig& cfg) {
  const int r = cfg.kernel_radius();
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  const double denom = 2.0 * cfg.sigma() * cfg.sigma();
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / denom);
    sum += k[static_cast<std::size_t>(i + r)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian blur without output quantization (row-major plane).
inline std::vector<double> gaussian_blur_plane(const GrayImage& img, const BlurConfig& cfg) {
  const auto kernel = gaussian_kernel(cfg);
  const int r = cfg.kernel_radius();
  const int w = img.width();
  const int h = img.height();
  std::vector<double> tmp(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += kernel[static_cast<std::size_t>(i + r)] * img.clamped(x + i, y);
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  std::vector<double> out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int sy = std::clamp(y + i, 0, h - 1);
        acc += kernel[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(sy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  return out;
}

inline GrayImage gaussian_blur(const GrayImage& img, const BlurConfig& cfg) {
  const auto plane = gaussian_blur_plane(img, cfg);
  GrayImage out(img.width(), img.height());
  auto px = out.pixels();
  for (std::size_t i = 0; i < plane.size(); ++i) px[i] = to_gray(plane[i]);
  return out;
}

}  // namespace ocular
