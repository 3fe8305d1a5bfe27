#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ocular/dataset.hpp"
#include "ocular/eval.hpp"
#include "ocular/image.hpp"

namespace ocular {

// Oriented band-pass texture: a sum of sinusoids around one frequency.
struct TextureSpec {
  double frequency = 0.1;    // cycles per pixel, in (0, 0.5)
  double orientation = 0.0;  // radians
  double contrast = 40.0;    // gray levels, <= 80

  void validate(const char* what) const {
    if (!(frequency > 0.0 && frequency < 0.5))
      throw DataError(std::string(what) + ": texture frequency must be in (0, 0.5)");
    if (!(contrast >= 0.0 && contrast <= 80.0)) throw DataError(std::string(what) + ": contrast must be in [0, 80]");
  }
};

struct SynthSpec {
  int num_subjects_per_class = 20;
  int images_per_subject = 3;
  int width = 640;
  int height = 480;
  int min_radius = 55;
  int max_radius = 70;
  // Inside the iris, keyed by race: [non_caucasian, caucasian].
  std::array<TextureSpec, 2> iris_texture{{{0.25, 0.0, 40.0}, {0.05, 0.0, 40.0}}};
  // Outside the iris, keyed by gender: [female, male].
  std::array<TextureSpec, 2> field_texture{{{0.03, 0.0, 30.0}, {0.03, std::numbers::pi / 2, 30.0}}};
  double background_contrast = 6.0;  // subject-specific texture shared by all classes
  // Relative weights over EyeColor values (brown ... unknown).
  std::array<double, 7> eye_color_mix{4, 2, 1, 1, 1, 0, 0};
  // Per EyeColor, probability that a subject's iris texture belongs to the
  // other race class.
  std::array<double, 7> iris_flip_probability{};
  int max_shift = 5;
  int illumination = 10;
  int components = 16;  // sinusoids per texture
  AlignParams align;    // frame the geometry must stay alignable to
  std::string sensor = "synth";
  std::uint64_t seed = 1;

  void validate() const {
    if (num_subjects_per_class < 1 || images_per_subject < 1) throw DataError("synth: counts must be >= 1");
    if (min_radius < 4 || max_radius < min_radius) throw DataError("synth: bad iris radius range");
    for (const auto& t : iris_texture) t.validate("iris texture");
    for (const auto& t : field_texture) t.validate("field texture");
    if (components < 1) throw DataError("synth: components must be >= 1");
    double total = 0.0;
    for (double w : eye_color_mix) {
      if (w < 0.0) throw DataError("synth: negative eye color weight");
      total += w;
    }
    if (!(total > 0.0)) throw DataError("synth: eye color mix is empty");
    for (double p : iris_flip_probability)
      if (p < 0.0 || p > 1.0) throw DataError("synth: flip probability outside [0, 1]");
    align.validate();
  }
};

struct SynthSubject {
  std::string subject_id;
  Gender gender = Gender::Unknown;
  Race race = Race::Unknown;
  EyeColor eye_color = EyeColor::Unknown;
  Eye eye = Eye::L;
  int radius = 0;
  int center_x = 0;
  int center_y = 0;
  bool iris_flipped = false;
  std::uint64_t seed = 0;
};

struct SynthLedger {
  std::vector<SynthSubject> subjects;
  std::size_t images = 0;

  std::map<std::string, std::size_t> subject_counts(Field f) const {
    std::map<std::string, std::size_t> out;
    for (const auto& s : subjects) {
      SampleRecord r;
      r.subject_id = s.subject_id;
      r.gender = s.gender;
      r.race = s.race;
      r.eye_color = s.eye_color;
      r.eye = s.eye;
      ++out[field_value(r, f)];
    }
    return out;
  }

  std::string to_csv() const {
    std::string s = "subject_id,gender,race,eye_color,eye,iris_r,iris_flipped\n";
    for (const auto& sub : subjects)
      s += sub.subject_id + "," + std::string(to_string(sub.gender)) + "," + std::string(to_string(sub.race)) + "," +
           std::string(to_string(sub.eye_color)) + "," + std::string(to_string(sub.eye)) + "," +
           std::to_string(sub.radius) + "," + (sub.iris_flipped ? "1" : "0") + "\n";
    return s;
  }
};

namespace detail {

// Sum of sinusoids sampled on a raster, anchored at (ox, oy).
class OrientedTexture {
 public:
  OrientedTexture(const TextureSpec& spec, int components, std::mt19937_64& rng) : contrast_(spec.contrast) {
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);
    std::uniform_real_distribution<double> angle(-0.25, 0.25);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (int c = 0; c < components; ++c) {
      const double f = spec.frequency * (1.0 + jitter(rng));
      const double th = spec.orientation + angle(rng);
      waves_.push_back({2.0 * std::numbers::pi * f * std::cos(th), 2.0 * std::numbers::pi * f * std::sin(th), phase(rng)});
    }
    norm_ = contrast_ / std::sqrt(components / 2.0) / 2.0;
  }

  // Adds the texture into `plane` (row stride w) over columns [x0, x1) and
  // rows [y0, y1).
  void render(std::vector<double>& plane, int w, double ox, double oy, int x0, int x1, int y0, int y1) const {
    if (contrast_ == 0.0) return;
    for (const auto& wave : waves_) {
      const std::complex<double> step = std::polar(1.0, wave.kx);
      for (int y = y0; y < y1; ++y) {
        std::complex<double> z = std::polar(1.0, wave.kx * (x0 - ox) + wave.ky * (y - oy) + wave.phase);
        double* row = plane.data() + static_cast<std::size_t>(y) * w;
        for (int x = x0; x < x1; ++x) {
          row[x] += norm_ * z.real();
          z *= step;
        }
      }
    }
  }

 private:
  struct Wave {
    double kx, ky, phase;
  };
  double contrast_;
  double norm_ = 0.0;
  std::vector<Wave> waves_;
};

}  // namespace detail

inline constexpr double kFieldLevel = 150.0;
inline constexpr double kIrisLevel = 100.0;
inline constexpr double kPupilLevel = 20.0;
inline constexpr double kPupilFraction = 0.4;

// Renders one image of a subject with the iris centred at (cx, cy).
inline GrayImage render_subject_image(const SynthSpec& spec, const SynthSubject& subject, int cx, int cy,
                                      double illumination) {
  std::mt19937_64 rng(subject.seed);
  const int race_class = subject.race == Race::Caucasian ? 1 : 0;
  const int iris_class = subject.iris_flipped ? 1 - race_class : race_class;
  const int field_class = subject.gender == Gender::Male ? 1 : 0;
  const detail::OrientedTexture iris(spec.iris_texture[static_cast<std::size_t>(iris_class)], spec.components, rng);
  const detail::OrientedTexture field(spec.field_texture[static_cast<std::size_t>(field_class)], spec.components, rng);
  const detail::OrientedTexture background({0.12, 0.0, spec.background_contrast}, spec.components, rng);

  const int w = spec.width;
  const int h = spec.height;
  std::vector<double> outer(static_cast<std::size_t>(w) * h, kFieldLevel + illumination);
  field.render(outer, w, cx, cy, 0, w, 0, h);
  background.render(outer, w, cx, cy, 0, w, 0, h);
  std::vector<double> inner(static_cast<std::size_t>(w) * h, kIrisLevel + illumination);
  iris.render(inner, w, cx, cy, std::max(0, cx - subject.radius), std::min(w, cx + subject.radius + 1),
              std::max(0, cy - subject.radius), std::min(h, cy + subject.radius + 1));

  const long r2 = static_cast<long>(subject.radius) * subject.radius;
  const double pupil = kPupilFraction * subject.radius;
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const long dx = x - cx;
      const long dy = y - cy;
      const long d2 = dx * dx + dy * dy;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double v = outer[i];
      if (d2 < r2) v = static_cast<double>(d2) < pupil * pupil ? kPupilLevel + illumination : inner[i];
      img(x, y) = to_gray(v);
    }
  return img;
}

struct SynthDataset {
  DatasetManifest manifest;
  SynthLedger ledger;
  std::vector<GrayImage> images;  // parallel to manifest.records
};

// Builds the dataset in memory; image paths are "images/<subject>_<k>.pgm".
inline SynthDataset synthesize(const SynthSpec& spec) {
  spec.validate();
  const int n_subjects = 2 * spec.num_subjects_per_class;
  std::mt19937_64 master(mix_seed(spec.seed, 0));

  // Balanced, independent gender and race assignments.
  std::vector<int> race_of(static_cast<std::size_t>(n_subjects));
  for (int i = 0; i < n_subjects; ++i) race_of[static_cast<std::size_t>(i)] = i < spec.num_subjects_per_class ? 1 : 0;
  detail::shuffle(race_of, master);

  const double ratio = static_cast<double>(spec.max_radius) / spec.align.canonical_radius;
  SynthDataset out;
  out.manifest.name = "synth";
  for (int i = 0; i < n_subjects; ++i) {
    SynthSubject s;
    char id[32];
    std::snprintf(id, sizeof id, "s%03d", i);
    s.subject_id = id;
    s.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(i) + 1);
    std::mt19937_64 rng(s.seed ^ 0xA5A5A5A5ull);
    s.gender = i % 2 ? Gender::Male : Gender::Female;
    s.race = race_of[static_cast<std::size_t>(i)] ? Race::Caucasian : Race::NonCaucasian;
    std::discrete_distribution<int> color(spec.eye_color_mix.begin(), spec.eye_color_mix.end());
    s.eye_color = static_cast<EyeColor>(color(rng));
    s.eye = std::bernoulli_distribution(0.5)(rng) ? Eye::R : Eye::L;
    s.radius = std::uniform_int_distribution<int>(spec.min_radius, spec.max_radius)(rng);
    s.iris_flipped = std::bernoulli_distribution(spec.iris_flip_probability[static_cast<std::size_t>(s.eye_color)])(rng);

    // Centre range that keeps every jittered image alignable at the largest radius.
    const int x_lo = static_cast<int>(std::ceil(spec.align.center_x() * ratio)) + spec.max_shift;
    const int x_hi = static_cast<int>(std::floor(spec.width - 1 - (spec.align.out_w - 1 - spec.align.center_x()) * ratio)) - spec.max_shift;
    const int y_lo = static_cast<int>(std::ceil(spec.align.center_y() * ratio)) + spec.max_shift;
    const int y_hi = static_cast<int>(std::floor(spec.height - 1 - (spec.align.out_h - 1 - spec.align.center_y()) * ratio)) - spec.max_shift;
    if (x_lo > x_hi || y_lo > y_hi) throw DataError("synth: image too small to keep the largest iris alignable");
    s.center_x = std::uniform_int_distribution<int>(x_lo, x_hi)(rng);
    s.center_y = std::uniform_int_distribution<int>(y_lo, y_hi)(rng);

    for (int k = 0; k < spec.images_per_subject; ++k) {
      std::uniform_int_distribution<int> shift(-spec.max_shift, spec.max_shift);
      std::uniform_int_distribution<int> light(-spec.illumination, spec.illumination);
      const int cx = s.center_x + shift(rng);
      const int cy = s.center_y + shift(rng);
      const int lum = light(rng);
      out.images.push_back(render_subject_image(spec, s, cx, cy, lum));
      SampleRecord rec;
      rec.image_path = "images/" + s.subject_id + "_" + std::to_string(k) + ".pgm";
      rec.subject_id = s.subject_id;
      rec.eye = s.eye;
      rec.sensor = spec.sensor;
      rec.gender = s.gender;
      rec.race = s.race;
      rec.eye_color = s.eye_color;
      rec.geometry = {static_cast<double>(cx), static_cast<double>(cy), static_cast<double>(s.radius)};
      out.manifest.records.push_back(std::move(rec));
    }
    out.ledger.subjects.push_back(s);
  }
  out.ledger.images = out.images.size();
  return out;
}

// Writes images/, manifest.csv and ledger.csv under out_dir.
inline SynthDataset generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  auto ds = synthesize(spec);
  std::filesystem::create_directories(out_dir / "images");
  for (std::size_t i = 0; i < ds.images.size(); ++i) write_pgm(ds.images[i], out_dir / ds.manifest.records[i].image_path);
  save_manifest(ds.manifest, out_dir / "manifest.csv");
  detail::write_text(out_dir / "ledger.csv", ds.ledger.to_csv());
  ds.manifest.base_dir = out_dir;
  ds.manifest.name = "manifest";
  return ds;
}

// Occluding-disc ("dead leaves") image with natural-image-like statistics,
// for learning filter banks when no photographs are at hand.
inline GrayImage dead_leaves_image(int width, int height, std::uint64_t seed, int discs = 4000) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> plane(static_cast<std::size_t>(width) * height, 128.0);
  constexpr double r_min = 2.0;
  constexpr double r_max = 64.0;
  for (int d = 0; d < discs; ++d) {
    // radius density proportional to r^-3 on [r_min, r_max]
    const double u = unit(rng);
    const double r = 1.0 / std::sqrt((1.0 - u) / (r_min * r_min) + u / (r_max * r_max));
    const double cx = unit(rng) * width;
    const double cy = unit(rng) * height;
    const double gray = 255.0 * unit(rng);
    const int x0 = std::max(0, static_cast<int>(cx - r));
    const int x1 = std::min(width - 1, static_cast<int>(cx + r));
    const int y0 = std::max(0, static_cast<int>(cy - r));
    const int y1 = std::min(height - 1, static_cast<int>(cy + r));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r) plane[static_cast<std::size_t>(y) * width + x] = gray;
  }
  GrayImage img(width, height);
  for (std::size_t i = 0; i < plane.size(); ++i) img.pixels()[i] = to_gray(plane[i]);
  return img;
}

}  // namespace ocular
