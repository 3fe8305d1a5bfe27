#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ocular/align.hpp"
#include "ocular/descriptors.hpp"
#include "ocular/detail/binary_io.hpp"

namespace ocular {

// What produced a feature vector. Models and features only mix when these match.
struct FeatureFingerprint {
  std::string descriptor;
  RegionSelector region = RegionSelector::ExtendedOcular;
  std::size_t dim = 0;

  std::string to_string() const {
    return descriptor + "|" + std::string(ocular::to_string(region)) + "|" + std::to_string(dim);
  }
  bool operator==(const FeatureFingerprint&) const = default;
};

struct FeatureVector {
  std::string descriptor_id;
  RegionSelector region = RegionSelector::ExtendedOcular;
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  FeatureFingerprint fingerprint() const { return {descriptor_id, region, values.size()}; }
  bool operator==(const FeatureVector&) const = default;
};

inline constexpr int kDefaultCell = 20;

// Row-major cells of cell x cell codes, one L1-normalized histogram per cell,
// concatenated in cell order.
inline std::vector<double> tessellate_histograms(const CodeImage& code, int cell = kDefaultCell) {
  if (cell < 1) throw DataError("cell size must be >= 1");
  if (code.width() % cell != 0 || code.height() % cell != 0)
    throw DataError("code image " + std::to_string(code.width()) + "x" + std::to_string(code.height()) +
                    " is not divisible into " + std::to_string(cell) + "px cells");
  const int cols = code.width() / cell;
  const int rows = code.height() / cell;
  const auto bins = static_cast<std::size_t>(code.cardinality());
  const double inv = 1.0 / (static_cast<double>(cell) * cell);
  std::vector<double> out(static_cast<std::size_t>(cols) * rows * bins, 0.0);
  for (int cy = 0; cy < rows; ++cy)
    for (int cx = 0; cx < cols; ++cx) {
      double* hist = out.data() + (static_cast<std::size_t>(cy) * cols + cx) * bins;
      for (int y = cy * cell; y < (cy + 1) * cell; ++y)
        for (int x = cx * cell; x < (cx + 1) * cell; ++x) hist[code(x, y)] += 1.0;
      for (std::size_t b = 0; b < bins; ++b) hist[b] *= inv;
    }
  return out;
}

inline std::size_t num_cells(RegionSelector sel, const AlignParams& p, int cell = kDefaultCell) {
  if (sel == RegionSelector::IrisOnly) {
    const int side = 2 * p.canonical_radius;
    return static_cast<std::size_t>(side / cell) * static_cast<std::size_t>(side / cell);
  }
  return static_cast<std::size_t>(p.out_w / cell) * static_cast<std::size_t>(p.out_h / cell);
}

inline std::size_t feature_dim(const DescriptorConfig& cfg, RegionSelector sel, const AlignParams& p = {},
                               int cell = kDefaultCell) {
  return num_cells(sel, p, cell) * static_cast<std::size_t>(cfg.cardinality());
}

// Region of an already aligned frame to feature vector.
inline FeatureVector features_from_frame(const GrayImage& frame, RegionSelector sel, const DescriptorConfig& cfg,
                                         const AlignParams& p = {}) {
  const auto region = apply_region(frame, p, sel);
  return {cfg.fingerprint(), sel, tessellate_histograms(cfg.code_image(region))};
}

inline FeatureVector extract_features(const GrayImage& img, const OcularGeometry& geo, RegionSelector sel,
                                      const DescriptorConfig& cfg, const AlignParams& p = {}) {
  return features_from_frame(align_ocular(img, geo, p), sel, cfg, p);
}

inline constexpr std::uint16_t kFeatureFileVersion = 1;

// "OFEA", version, descriptor fingerprint, region, dim, then float32 values.
inline std::vector<std::uint8_t> encode_features(const FeatureVector& fv) {
  detail::ByteWriter w;
  w.put_raw("OFEA");
  w.put(kFeatureFileVersion);
  w.put_string(fv.descriptor_id);
  w.put(static_cast<std::uint8_t>(fv.region));
  w.put(static_cast<std::uint64_t>(fv.values.size()));
  for (double v : fv.values) w.put(static_cast<float>(v));
  return std::move(w.bytes());
}

inline FeatureVector decode_features(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (r.get_raw(4) != "OFEA") throw FormatError("bad feature file magic", 0);
  const auto version = r.get<std::uint16_t>();
  if (version != kFeatureFileVersion) throw FormatError("unsupported feature file version", 4);
  FeatureVector fv;
  fv.descriptor_id = r.get_string();
  const std::size_t region_at = r.offset();
  const auto region = r.get<std::uint8_t>();
  if (region > 2) throw FormatError("bad region tag", region_at);
  fv.region = static_cast<RegionSelector>(region);
  const auto dim = r.get<std::uint64_t>();
  if (dim * sizeof(float) != r.remaining()) throw FormatError("payload size does not match dim", r.offset());
  fv.values.resize(dim);
  for (auto& v : fv.values) v = r.get<float>();
  return fv;
}

inline void save_features(const FeatureVector& fv, const std::filesystem::path& path) {
  detail::write_file(path, encode_features(fv));
}

inline FeatureVector load_features(const std::filesystem::path& path) { return decode_features(detail::read_file(path)); }

}  // namespace ocular
