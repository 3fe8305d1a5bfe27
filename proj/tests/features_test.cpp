#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ocular/features.hpp"
#include "test_util.hpp"

namespace ocular {
namespace {

using testing::random_image;
using testing::TempDir;

FilterBank shipped_bank() { return load_filter_bank(std::filesystem::path(OCULAR_DATA_DIR) / "bsif_k9_n8.bin"); }

TEST(TessellateTest, DimensionArithmetic) {
  EXPECT_EQ(tessellate_histograms(CodeImage(400, 340, 256)).size(), 87'040u);
  EXPECT_EQ(tessellate_histograms(CodeImage(120, 120, 59)).size(), 2'124u);
  EXPECT_EQ(tessellate_histograms(CodeImage(400, 340, 59)).size(), 20'060u);
}

TEST(TessellateTest, DimensionFormulaOverConfigGrid) {
  const auto bsif = DescriptorConfig::bsif(shipped_bank());
  const AlignParams p;
  for (const auto& cfg : {bsif, DescriptorConfig::lbp(), DescriptorConfig::lpq()})
    for (auto sel : {RegionSelector::ExtendedOcular, RegionSelector::IrisOnly, RegionSelector::IrisExcluded})
      EXPECT_EQ(feature_dim(cfg, sel, p), num_cells(sel, p) * static_cast<std::size_t>(cfg.cardinality()));
  EXPECT_EQ(feature_dim(bsif, RegionSelector::ExtendedOcular), 87'040u);
  EXPECT_EQ(feature_dim(DescriptorConfig::lbp(), RegionSelector::ExtendedOcular), 20'060u);
  EXPECT_EQ(feature_dim(DescriptorConfig::lpq(), RegionSelector::ExtendedOcular), 87'040u);
  EXPECT_EQ(feature_dim(bsif, RegionSelector::IrisOnly), 9'216u);
}

TEST(TessellateTest, DegeneratePointMass) {
  CodeImage codes(20, 20, 256);
  for (auto& c : codes.codes()) c = 5;
  const auto v = tessellate_histograms(codes);
  ASSERT_EQ(v.size(), 256u);
  for (std::size_t b = 0; b < 256; ++b) EXPECT_EQ(v[b], b == 5 ? 1.0 : 0.0);
}

TEST(TessellateTest, CellsAreRowMajorAndNormalized) {
  CodeImage codes(40, 20, 4);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 40; ++x) codes(x, y) = x < 20 ? 1 : (y < 10 ? 2 : 3);
  const auto v = tessellate_histograms(codes);
  ASSERT_EQ(v.size(), 8u);
  EXPECT_EQ(v[1], 1.0);
  EXPECT_EQ(v[4 + 2], 0.5);
  EXPECT_EQ(v[4 + 3], 0.5);
}

TEST(TessellateTest, RejectsIndivisibleDims) {
  EXPECT_THROW(tessellate_histograms(CodeImage(30, 20, 4)), DataError);
  EXPECT_THROW(tessellate_histograms(CodeImage(20, 20, 4), 0), DataError);
}

TEST(ExtractTest, EveryCellSumsToOne) {
  std::mt19937_64 rng(1);
  const auto src = random_image(640, 480, rng);
  for (const auto& cfg : {DescriptorConfig::bsif(shipped_bank()), DescriptorConfig::lbp(), DescriptorConfig::lpq()}) {
    const auto fv = extract_features(src, {320, 240, 60}, RegionSelector::ExtendedOcular, cfg);
    const auto bins = static_cast<std::size_t>(cfg.cardinality());
    double total = 0;
    for (std::size_t c = 0; c < fv.dim() / bins; ++c) {
      double cell = 0;
      for (std::size_t b = 0; b < bins; ++b) cell += fv.values[c * bins + b];
      ASSERT_NEAR(cell, 1.0, 1e-9);
      total += cell;
    }
    EXPECT_NEAR(total, 340.0, 1e-6);
  }
}

TEST(ExtractTest, Deterministic) {
  std::mt19937_64 rng(2);
  const auto src = random_image(640, 480, rng);
  const auto cfg = DescriptorConfig::bsif(shipped_bank());
  const auto a = extract_features(src, {300, 250, 55}, RegionSelector::IrisOnly, cfg);
  const auto b = extract_features(src, {300, 250, 55}, RegionSelector::IrisOnly, cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.dim(), 9'216u);
  EXPECT_EQ(a.descriptor_id, cfg.fingerprint());
}

TEST(ExtractTest, ConstantSourceIsPointMassAtZero) {
  const auto cfg = DescriptorConfig::bsif(shipped_bank());
  const auto fv = extract_features(GrayImage(640, 480, 120), {320, 240, 60}, RegionSelector::ExtendedOcular, cfg);
  for (std::size_t i = 0; i < fv.dim(); ++i) ASSERT_EQ(fv.values[i], i % 256 == 0 ? 1.0 : 0.0);
}

TEST(ExtractTest, PropagatesInsufficientBorder) {
  EXPECT_THROW(extract_features(GrayImage(480, 480), {30, 30, 60}, RegionSelector::ExtendedOcular,
                                DescriptorConfig::lbp()),
               InsufficientBorder);
}

// Cells whose descriptor footprint (cell grown by the filter half-width) never
// touches the iris disc are identical between the extended and iris-excluded
// vectors; cells overlapping the disc differ.
TEST(ExtractTest, IrisMaskOnlyChangesNearbyCells) {
  std::mt19937_64 rng(3);
  const AlignParams p;
  const auto frame = random_image(p.out_w, p.out_h, rng, 10, 245);
  const auto cfg = DescriptorConfig::bsif(shipped_bank());
  const int reach = cfg.bank().k() / 2;
  const auto ext = features_from_frame(frame, RegionSelector::ExtendedOcular, cfg, p);
  const auto exc = features_from_frame(frame, RegionSelector::IrisExcluded, cfg, p);
  const int cols = p.out_w / kDefaultCell;
  int untouched = 0;
  int inside = 0;
  for (int cy = 0; cy < p.out_h / kDefaultCell; ++cy)
    for (int cx = 0; cx < cols; ++cx) {
      bool near_disc = false;
      bool overlaps_disc = false;
      for (int y = cy * 20 - reach; y < (cy + 1) * 20 + reach; ++y)
        for (int x = cx * 20 - reach; x < (cx + 1) * 20 + reach; ++x) {
          const bool in = in_iris_disc(x, y, p);
          near_disc = near_disc || in;
          const bool core = x >= cx * 20 && x < (cx + 1) * 20 && y >= cy * 20 && y < (cy + 1) * 20;
          overlaps_disc = overlaps_disc || (in && core);
        }
      const std::size_t off = static_cast<std::size_t>(cy * cols + cx) * 256;
      const bool same = std::equal(ext.values.begin() + static_cast<std::ptrdiff_t>(off),
                                   ext.values.begin() + static_cast<std::ptrdiff_t>(off + 256),
                                   exc.values.begin() + static_cast<std::ptrdiff_t>(off));
      if (!near_disc) {
        ASSERT_TRUE(same) << "cell " << cx << "," << cy;
        ++untouched;
      }
      if (overlaps_disc) {
        EXPECT_FALSE(same) << "cell " << cx << "," << cy;
        ++inside;
      }
    }
  EXPECT_GT(untouched, 250);
  EXPECT_GT(inside, 30);
}

// Shuffling pixels inside one interior cell leaves every cell whose footprint
// excludes that cell unchanged.
TEST(ExtractTest, PermutationInsideCellIsLocal) {
  std::mt19937_64 rng(4);
  const AlignParams p;
  auto frame = random_image(p.out_w, p.out_h, rng);
  const auto cfg = DescriptorConfig::lbp();
  const auto before = features_from_frame(frame, RegionSelector::ExtendedOcular, cfg, p);
  const int tx = 7, ty = 5;  // target cell
  std::vector<std::uint8_t> px;
  for (int y = ty * 20; y < ty * 20 + 20; ++y)
    for (int x = tx * 20; x < tx * 20 + 20; ++x) px.push_back(frame(x, y));
  std::shuffle(px.begin(), px.end(), rng);
  std::size_t i = 0;
  for (int y = ty * 20; y < ty * 20 + 20; ++y)
    for (int x = tx * 20; x < tx * 20 + 20; ++x) frame(x, y) = px[i++];
  const auto after = features_from_frame(frame, RegionSelector::ExtendedOcular, cfg, p);
  for (int cy = 0; cy < 17; ++cy)
    for (int cx = 0; cx < 20; ++cx) {
      if (std::abs(cx - tx) <= 1 && std::abs(cy - ty) <= 1) continue;
      const std::size_t off = static_cast<std::size_t>(cy * 20 + cx) * 59;
      for (std::size_t b = 0; b < 59; ++b) ASSERT_EQ(before.values[off + b], after.values[off + b]);
    }
}

TEST(FeatureFileTest, RoundTripAndLayout) {
  std::mt19937_64 rng(5);
  const auto fv = extract_features(random_image(640, 480, rng), {320, 240, 60}, RegionSelector::IrisOnly,
                                   DescriptorConfig::lbp());
  TempDir dir("feat");
  save_features(fv, dir / "f.bin");
  const auto back = load_features(dir / "f.bin");
  EXPECT_EQ(back.descriptor_id, fv.descriptor_id);
  EXPECT_EQ(back.region, fv.region);
  ASSERT_EQ(back.dim(), fv.dim());
  for (std::size_t i = 0; i < fv.dim(); ++i) ASSERT_EQ(back.values[i], static_cast<float>(fv.values[i]));
  auto bytes = encode_features(fv);
  bytes.pop_back();
  EXPECT_THROW(decode_features(bytes), FormatError);
}

}  // namespace
}  // namespace ocular
