#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "ocular/synth.hpp"
#include "test_util.hpp"

namespace ocular {
namespace {

using testing::TempDir;

SynthSpec ten_per_class() {
  SynthSpec s;
  s.num_subjects_per_class = 10;
  s.seed = 3;
  return s;
}

TEST(SynthTest, ManifestShape) {
  const auto ds = synthesize(ten_per_class());
  EXPECT_EQ(ds.manifest.size(), 60u);
  EXPECT_EQ(ds.images.size(), 60u);
  EXPECT_EQ(subjects(ds.manifest).size(), 20u);
  EXPECT_EQ(ds.ledger.images, 60u);
  for (const auto& img : ds.images) {
    EXPECT_EQ(img.width(), 640);
    EXPECT_EQ(img.height(), 480);
  }
  const AlignParams p;
  for (std::size_t i = 0; i < ds.images.size(); ++i)
    EXPECT_NO_THROW(align_ocular(ds.images[i], ds.manifest.records[i].geometry, p));
}

TEST(SynthTest, BalancedClassesMatchLedger) {
  const auto ds = synthesize(ten_per_class());
  for (auto f : {Field::Gender, Field::Race, Field::EyeColor, Field::Eye})
    EXPECT_EQ(subject_count_by(ds.manifest, f), ds.ledger.subject_counts(f)) << to_string(f);
  const auto race = ds.ledger.subject_counts(Field::Race);
  EXPECT_EQ(race.at("caucasian"), 10u);
  EXPECT_EQ(race.at("non_caucasian"), 10u);
  const auto gender = ds.ledger.subject_counts(Field::Gender);
  EXPECT_EQ(gender.at("male"), 10u);
  EXPECT_EQ(gender.at("female"), 10u);
  EXPECT_EQ(filter(ds.manifest, parse_filter("race=non_caucasian")).size(), 3 * race.at("non_caucasian"));
}

// With textures switched off the template is piecewise constant, so the iris
// disc can be recovered by thresholding and compared with the manifest.
TEST(SynthTest, GeometryMatchesRenderedDiscs) {
  auto spec = ten_per_class();
  for (auto& t : spec.iris_texture) t.contrast = 0;
  for (auto& t : spec.field_texture) t.contrast = 0;
  spec.background_contrast = 0;
  const auto ds = synthesize(spec);
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto& img = ds.images[i];
    const auto& geo = ds.manifest.records[i].geometry;
    double sx = 0, sy = 0, n = 0;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (img(x, y) < 125) sx += x, sy += y, n += 1;
    EXPECT_NEAR(sx / n, geo.center_x, 1.0);
    EXPECT_NEAR(sy / n, geo.center_y, 1.0);
    EXPECT_NEAR(std::sqrt(n / std::numbers::pi), geo.radius, 1.0);
  }
}

// With textures on, the pupil is still the darkest disc and is concentric.
TEST(SynthTest, PupilCentroidWithTextures) {
  const auto ds = synthesize(ten_per_class());
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto& img = ds.images[i];
    const auto& geo = ds.manifest.records[i].geometry;
    double sx = 0, sy = 0, n = 0;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (img(x, y) < 35) sx += x, sy += y, n += 1;
    EXPECT_NEAR(sx / n, geo.center_x, 1.0);
    EXPECT_NEAR(sy / n, geo.center_y, 1.0);
  }
}

TEST(SynthTest, JitterStaysInRange) {
  const auto ds = synthesize(ten_per_class());
  std::map<std::string, const SynthSubject*> subj;
  for (const auto& s : ds.ledger.subjects) subj[s.subject_id] = &s;
  for (const auto& r : ds.manifest.records) {
    const auto& s = *subj.at(r.subject_id);
    EXPECT_LE(std::abs(r.geometry.center_x - s.center_x), 5.0);
    EXPECT_LE(std::abs(r.geometry.center_y - s.center_y), 5.0);
    EXPECT_EQ(r.geometry.radius, s.radius);
    EXPECT_GE(s.radius, 55);
    EXPECT_LE(s.radius, 70);
  }
}

TEST(SynthTest, ByteIdenticalAcrossRuns) {
  TempDir a("synth-a"), b("synth-b");
  const auto ds = generate(ten_per_class(), a.path());
  generate(ten_per_class(), b.path());
  for (const auto& name : {std::string("manifest.csv"), std::string("ledger.csv")})
    EXPECT_EQ(detail::read_file(a / name), detail::read_file(b / name)) << name;
  for (const auto& r : ds.manifest.records)
    ASSERT_EQ(detail::read_file(a / r.image_path), detail::read_file(b / r.image_path)) << r.image_path;
  const auto loaded = load_manifest(a / "manifest.csv");
  EXPECT_NO_THROW(validate_manifest(loaded));
  EXPECT_EQ(load_pgm(loaded.resolve(loaded.records[5])), ds.images[5]);
  auto other = ten_per_class();
  other.seed = 4;
  EXPECT_NE(synthesize(other).images[0], ds.images[0]);
}

// Mean power of a Hann-tapered window in an annulus of radial frequency.
double band_energy(const GrayImage& img, int x0, int y0, int size, double f_lo, double f_hi) {
  std::vector<double> v(static_cast<std::size_t>(size * size));
  double mean = 0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) mean += img(x0 + x, y0 + y);
  mean /= size * size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double w = std::sin(std::numbers::pi * (x + 0.5) / size) * std::sin(std::numbers::pi * (y + 0.5) / size);
      v[static_cast<std::size_t>(y * size + x)] = w * w * (img(x0 + x, y0 + y) - mean);
    }
  double energy = 0;
  int bins = 0;
  for (int v_ = 0; v_ < size; ++v_)
    for (int u = 0; u < size; ++u) {
      const double fu = (u <= size / 2 ? u : u - size) / static_cast<double>(size);
      const double fv = (v_ <= size / 2 ? v_ : v_ - size) / static_cast<double>(size);
      const double f = std::hypot(fu, fv);
      if (f < f_lo || f > f_hi) continue;
      std::complex<double> acc = 0;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          acc += v[static_cast<std::size_t>(y * size + x)] * std::polar(1.0, -2 * std::numbers::pi * (fu * x + fv * y));
      energy += std::norm(acc);
      ++bins;
    }
  return energy / bins;
}

TEST(SynthTest, IrisSpectraDifferByRace) {
  const auto ds = synthesize(SynthSpec{});
  std::array<double, 2> high{}, low{};
  std::array<int, 2> count{};
  for (std::size_t i = 0; i < ds.images.size(); i += 3) {
    const auto& r = ds.manifest.records[i];
    const int c = r.race == Race::Caucasian;
    const int size = 24;
    const int x0 = static_cast<int>(r.geometry.center_x + 0.7 * r.geometry.radius) - size / 2;
    const int y0 = static_cast<int>(r.geometry.center_y) - size / 2;
    high[c] += band_energy(ds.images[i], x0, y0, size, 0.2, 0.3);
    low[c] += band_energy(ds.images[i], x0, y0, size, 0.03, 0.08);
    ++count[c];
  }
  for (int c = 0; c < 2; ++c) high[c] /= count[c], low[c] /= count[c];
  EXPECT_GE(high[0] / high[1], 3.0);  // non_caucasian carries the fine texture
  EXPECT_GE(low[1] / low[0], 3.0);
}

TEST(SynthTest, FieldSpectraDifferByGender) {
  const auto ds = synthesize(SynthSpec{});
  // energy along the horizontal vs vertical frequency axis, away from the iris
  std::array<double, 2> ratio{};
  std::array<int, 2> count{};
  for (std::size_t i = 0; i < ds.images.size(); i += 3) {
    const auto& r = ds.manifest.records[i];
    const int g = r.gender == Gender::Male;
    const int size = 64;
    const int x0 = r.geometry.center_x > 320 ? 8 : 640 - 8 - size;
    const auto& img = ds.images[i];
    double hx = 0, hy = 0;
    for (int k = 1; k <= 3; ++k) {
      // DFT bins on the axes near 0.03 cycles/px
      std::complex<double> ax = 0, ay = 0;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double px = img(x0 + x, 8 + y);
          ax += px * std::polar(1.0, -2 * std::numbers::pi * k * x / size);
          ay += px * std::polar(1.0, -2 * std::numbers::pi * k * y / size);
        }
      hx += std::norm(ax);
      hy += std::norm(ay);
    }
    ratio[g] += std::log(hx / hy);
    ++count[g];
  }
  // orientation 0 puts energy on the horizontal axis (female), pi/2 on the vertical (male)
  EXPECT_GE(ratio[0] / count[0], std::log(3.0));
  EXPECT_LE(ratio[1] / count[1], -std::log(3.0));
}

TEST(SynthTest, FlipProbabilityOneFlipsEverySubjectOfThatColor) {
  auto spec = ten_per_class();
  spec.iris_flip_probability[static_cast<std::size_t>(EyeColor::Brown)] = 1.0;
  const auto ds = synthesize(spec);
  for (const auto& s : ds.ledger.subjects) EXPECT_EQ(s.iris_flipped, s.eye_color == EyeColor::Brown);
  EXPECT_NE(ds.ledger.to_csv().find(",1\n"), std::string::npos);
}

TEST(SynthTest, SpecValidation) {
  auto s = SynthSpec{};
  s.iris_texture[0].frequency = 0.6;
  EXPECT_THROW(synthesize(s), DataError);
  s = SynthSpec{};
  s.field_texture[1].contrast = 90;
  EXPECT_THROW(synthesize(s), DataError);
  s = SynthSpec{};
  s.width = 300;
  EXPECT_THROW(synthesize(s), DataError);
  s = SynthSpec{};
  s.eye_color_mix.fill(0);
  EXPECT_THROW(synthesize(s), DataError);
}

TEST(DeadLeavesTest, DeterministicAndVaried) {
  const auto a = dead_leaves_image(128, 96, 5);
  EXPECT_EQ(a, dead_leaves_image(128, 96, 5));
  EXPECT_NE(a, dead_leaves_image(128, 96, 6));
  std::set<int> levels(a.pixels().begin(), a.pixels().end());
  EXPECT_GT(levels.size(), 50u);
}

}  // namespace
}  // namespace ocular
