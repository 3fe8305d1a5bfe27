#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "ocular/image.hpp"

namespace ocular {

// Iris center and radius in source-image pixel coordinates.
struct OcularGeometry {
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 0.0;

  void validate(const GrayImage& img) const {
    if (!(radius > 0.0)) throw DataError("iris radius must be > 0");
    if (center_x < 0.0 || center_y < 0.0 || center_x > img.width() - 1 || center_y > img.height() - 1)
      throw DataError("iris center outside image bounds");
  }
  bool operator==(const OcularGeometry&) const = default;
};

// Canonical frame: iris center at (out_w/2, out_h/2), iris radius canonical_radius.
struct AlignParams {
  int out_w = 400;
  int out_h = 340;
  int canonical_radius = 60;

  int center_x() const noexcept { return out_w / 2; }
  int center_y() const noexcept { return out_h / 2; }

  void validate() const {
    if (out_w < 1 || out_h < 1) throw DataError("canonical frame must be at least 1x1");
    if (canonical_radius < 1 || 2 * canonical_radius >= std::min(out_w, out_h))
      throw DataError("canonical radius must be in [1, min(out_w, out_h)/2)");
  }
};

enum class RegionSelector { ExtendedOcular, IrisOnly, IrisExcluded };

inline std::string_view to_string(RegionSelector r) noexcept {
  switch (r) {
    case RegionSelector::ExtendedOcular: return "extended";
    case RegionSelector::IrisOnly: return "iris-only";
    case RegionSelector::IrisExcluded: return "iris-excluded";
  }
  return "?";
}

inline RegionSelector parse_region(std::string_view s) {
  if (s == "extended") return RegionSelector::ExtendedOcular;
  if (s == "iris-only") return RegionSelector::IrisOnly;
  if (s == "iris-excluded") return RegionSelector::IrisExcluded;
  throw DataError("unknown region '" + std::string(s) + "' (expected extended, iris-only, iris-excluded)");
}

// Uniform scale + translation taking the iris to the canonical center and
// radius, resampled bicubically. Output pixel o maps to
// source = iris_center + (o - canonical_center) / scale.
inline GrayImage align_ocular(const GrayImage& img, const OcularGeometry& geo, const AlignParams& p = {}) {
  geo.validate(img);
  p.validate();
  const double scale = p.canonical_radius / geo.radius;
  const double x0 = geo.center_x - p.center_x() / scale;
  const double y0 = geo.center_y - p.center_y() / scale;
  const double x1 = geo.center_x + (p.out_w - 1 - p.center_x()) / scale;
  const double y1 = geo.center_y + (p.out_h - 1 - p.center_y()) / scale;
  constexpr double eps = 1e-9;
  if (x0 < -eps || y0 < -eps || x1 > img.width() - 1 + eps || y1 > img.height() - 1 + eps)
    throw InsufficientBorder("aligned frame needs source x in [" + std::to_string(x0) + ", " + std::to_string(x1) +
                             "], y in [" + std::to_string(y0) + ", " + std::to_string(y1) + "] but image is " +
                             std::to_string(img.width()) + "x" + std::to_string(img.height()));

  // Horizontal then vertical cubic pass; taps beyond the raster are replicated
  // but only ever carry weight when the sample position is fractional.
  auto taps = [&](int out_size, double origin) {
    std::vector<detail::CubicTaps> t(static_cast<std::size_t>(out_size));
    for (int o = 0; o < out_size; ++o) {
      const double src = origin + o / scale;
      const double base = std::floor(src);
      const double frac = src - base;
      auto& tap = t[static_cast<std::size_t>(o)];
      tap.first = static_cast<int>(base) - 1;
      tap.w[0] = detail::cubic_weight(frac + 1.0);
      tap.w[1] = detail::cubic_weight(frac);
      tap.w[2] = detail::cubic_weight(1.0 - frac);
      tap.w[3] = detail::cubic_weight(2.0 - frac);
    }
    return t;
  };
  const auto tx = taps(p.out_w, geo.center_x - p.center_x() / scale);
  const auto ty = taps(p.out_h, geo.center_y - p.center_y() / scale);

  GrayImage out(p.out_w, p.out_h);
  std::vector<double> row(static_cast<std::size_t>(p.out_w));
  std::vector<double> acc(static_cast<std::size_t>(p.out_w));
  for (int y = 0; y < p.out_h; ++y) {
    const auto& vt = ty[static_cast<std::size_t>(y)];
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int k = 0; k < 4; ++k) {
      if (vt.w[k] == 0.0) continue;
      const int sy = vt.first + k;
      for (int x = 0; x < p.out_w; ++x) {
        const auto& ht = tx[static_cast<std::size_t>(x)];
        double h = 0.0;
        for (int j = 0; j < 4; ++j) h += ht.w[j] * img.clamped(ht.first + j, sy);
        row[static_cast<std::size_t>(x)] = h;
      }
      for (int x = 0; x < p.out_w; ++x) acc[static_cast<std::size_t>(x)] += vt.w[k] * row[static_cast<std::size_t>(x)];
    }
    for (int x = 0; x < p.out_w; ++x) out(x, y) = to_gray(acc[static_cast<std::size_t>(x)]);
  }
  return out;
}

// Membership test shared by both masks so they partition the frame exactly.
inline bool in_iris_disc(int x, int y, const AlignParams& p) noexcept {
  const long dx = x - p.center_x();
  const long dy = y - p.center_y();
  const long r = p.canonical_radius;
  return dx * dx + dy * dy < r * r;
}

inline GrayImage apply_region(const GrayImage& frame, const AlignParams& p, RegionSelector sel) {
  if (frame.width() != p.out_w || frame.height() != p.out_h)
    throw DataError("apply_region expects a canonical " + std::to_string(p.out_w) + "x" + std::to_string(p.out_h) +
                    " frame");
  switch (sel) {
    case RegionSelector::ExtendedOcular:
      return frame;
    case RegionSelector::IrisOnly: {
      const int side = 2 * p.canonical_radius;
      const int left = p.center_x() - p.canonical_radius;
      const int top = p.center_y() - p.canonical_radius;
      GrayImage out(side, side);
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          if (in_iris_disc(left + x, top + y, p)) out(x, y) = frame(left + x, top + y);
      return out;
    }
    case RegionSelector::IrisExcluded: {
      GrayImage out = frame;
      for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x)
          if (in_iris_disc(x, y, p)) out(x, y) = 0;
      return out;
    }
  }
  return frame;
}

}  // namespace ocular
