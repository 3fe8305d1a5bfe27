#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocular/dataset.hpp"
#include "ocular/detail/parallel.hpp"
#include "ocular/features.hpp"
#include "ocular/svm.hpp"

namespace ocular {

enum class Attribute { Gender, Race };

inline std::string_view to_string(Attribute a) noexcept { return a == Attribute::Gender ? "gender" : "race"; }

inline Attribute parse_attribute(std::string_view s) {
  if (s == "gender") return Attribute::Gender;
  if (s == "race") return Attribute::Race;
  throw DataError("unknown attribute '" + std::string(s) + "' (expected gender or race)");
}

// Class names ordered [label -1, label +1].
inline std::array<std::string, 2> attribute_classes(Attribute a) {
  if (a == Attribute::Gender) return {"female", "male"};
  return {"non_caucasian", "caucasian"};
}

// +1 / -1, or nothing for an unknown label.
inline std::optional<int> attribute_label(const SampleRecord& r, Attribute a) noexcept {
  if (a == Attribute::Gender) {
    if (r.gender == Gender::Male) return 1;
    if (r.gender == Gender::Female) return -1;
    return std::nullopt;
  }
  if (r.race == Race::Caucasian) return 1;
  if (r.race == Race::NonCaucasian) return -1;
  return std::nullopt;
}

// Derives independent sub-seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Repetition {
  std::set<std::string> train_subjects;
  std::set<std::string> test_subjects;
  std::uint64_t seed = 0;
};

struct SplitPlan {
  Attribute attribute = Attribute::Gender;
  double train_frac = 0.6;
  std::size_t subjects_per_class = 0;  // after majority subsampling
  std::size_t excluded_unknown_images = 0;
  std::vector<Repetition> repetitions;
};

namespace detail {

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t j = v.size(); j > 1; --j) std::swap(v[j - 1], v[std::uniform_int_distribution<std::size_t>(0, j - 1)(rng)]);
}

// Subjects per class (index 0 = label -1), and the count of images with an
// unknown label. A subject whose images disagree on the label is an error.
inline std::array<std::vector<std::string>, 2> subjects_by_class(const DatasetManifest& m, Attribute a,
                                                                  std::size_t* unknown_images = nullptr) {
  std::map<std::string, int> label_of;
  std::size_t unknown = 0;
  for (const auto& r : m.records) {
    const auto lab = attribute_label(r, a);
    if (!lab) {
      ++unknown;
      continue;
    }
    const auto [it, fresh] = label_of.emplace(r.subject_id, *lab);
    if (!fresh && it->second != *lab)
      throw DataError("subject " + r.subject_id + " has conflicting " + std::string(to_string(a)) + " labels");
  }
  if (unknown_images) *unknown_images = unknown;
  std::array<std::vector<std::string>, 2> out;
  for (const auto& [subject, lab] : label_of) out[lab > 0 ? 1 : 0].push_back(subject);
  return out;
}

}  // namespace detail

// Balanced, subject-disjoint train/test partitions. The majority class is
// subsampled once to the minority subject count; each repetition then sends
// floor(train_frac * n) subjects per class to training and the rest to test.
inline SplitPlan make_splits(const DatasetManifest& m, Attribute attribute, double train_frac = 0.6, int reps = 5,
                             std::uint64_t seed = 0) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw DataError("train fraction must be in (0, 1)");
  if (reps < 1) throw DataError("repetitions must be >= 1");
  SplitPlan plan;
  plan.attribute = attribute;
  plan.train_frac = train_frac;
  auto classes = detail::subjects_by_class(m, attribute, &plan.excluded_unknown_images);
  const auto names = attribute_classes(attribute);
  for (int c = 0; c < 2; ++c)
    if (classes[c].empty()) throw DataError("class '" + names[c] + "' has no subjects");

  const std::size_t n = std::min(classes[0].size(), classes[1].size());
  std::mt19937_64 balance_rng(mix_seed(seed, 0));
  for (auto& cls : classes) {
    if (cls.size() > n) {
      detail::shuffle(cls, balance_rng);
      cls.resize(n);
      std::sort(cls.begin(), cls.end());
    }
  }
  plan.subjects_per_class = n;
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n) + 1e-9));
  for (int r = 0; r < reps; ++r) {
    Repetition rep;
    rep.seed = mix_seed(seed, static_cast<std::uint64_t>(r) + 1);
    std::mt19937_64 rng(rep.seed);
    for (const auto& cls : classes) {
      auto order = cls;
      detail::shuffle(order, rng);
      rep.train_subjects.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
      rep.test_subjects.insert(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    }
    plan.repetitions.push_back(std::move(rep));
  }
  return plan;
}

// Descriptor + region + alignment applied to a raw manifest image.
class FeatureExtractor {
 public:
  FeatureExtractor(DescriptorConfig descriptor, RegionSelector region, AlignParams align = {})
      : descriptor_(std::move(descriptor)), region_(region), align_(align), fingerprint_(descriptor_.fingerprint()) {}

  // sigma > 0 blurs the raw image before alignment.
  FeatureVector operator()(const GrayImage& raw, const OcularGeometry& geo, double blur_sigma = 0.0) const {
    if (blur_sigma > 0.0) return extract_features(gaussian_blur(raw, BlurConfig(blur_sigma)), geo, region_, descriptor_, align_);
    return extract_features(raw, geo, region_, descriptor_, align_);
  }

  const DescriptorConfig& descriptor() const noexcept { return descriptor_; }
  RegionSelector region() const noexcept { return region_; }
  const AlignParams& align() const noexcept { return align_; }
  FeatureFingerprint fingerprint() const {
    return {fingerprint_, region_, feature_dim(descriptor_, region_, align_)};
  }

 private:
  DescriptorConfig descriptor_;
  RegionSelector region_;
  AlignParams align_;
  std::string fingerprint_;
};

// Features for a subset of manifest rows. Rows whose image cannot be loaded
// or aligned stay empty and are listed in `errors`.
struct FeatureTable {
  std::vector<std::optional<FeatureVector>> rows;
  std::map<std::size_t, std::string> errors;  // row index -> message
};

inline std::optional<FeatureVector> try_extract(const DatasetManifest& m, std::size_t row, const FeatureExtractor& ex,
                                                double sigma, std::string* error) {
  const auto& rec = m.records[row];
  try {
    const auto img = load_pgm(m.resolve(rec));
    return ex(img, rec.geometry, sigma);
  } catch (const DataError& e) {
    if (error) *error = rec.image_path + ": " + e.what();
  } catch (const FormatError& e) {
    if (error) *error = rec.image_path + ": " + e.what();
  }
  return std::nullopt;
}

inline void fill_features(FeatureTable& table, const DatasetManifest& m, std::span<const std::size_t> rows,
                          const FeatureExtractor& ex, double sigma = 0.0, unsigned threads = 0) {
  table.rows.resize(m.records.size());
  std::vector<std::size_t> todo;
  for (auto r : rows)
    if (!table.rows[r] && !table.errors.count(r)) todo.push_back(r);
  std::vector<std::string> errs(todo.size());
  detail::parallel_for(
      todo.size(), [&](std::size_t i) { table.rows[todo[i]] = try_extract(m, todo[i], ex, sigma, &errs[i]); }, threads);
  for (std::size_t i = 0; i < todo.size(); ++i)
    if (!table.rows[todo[i]]) table.errors[todo[i]] = errs[i];
}

struct PredictionRow {
  std::string image_path;
  int repetition = 0;
  std::string true_label;
  std::string predicted_label;
  double decision_value = 0.0;

  bool operator==(const PredictionRow&) const = default;
};

struct EvalReport {
  std::array<std::string, 2> classes;  // [label -1, label +1]
  std::vector<double> per_rep_accuracy;  // percent
  std::vector<std::size_t> per_rep_test_images;
  std::vector<std::size_t> per_rep_train_images;
  double mean = 0.0;
  double std = 0.0;  // population std over repetitions
  // confusion[true][predicted], percent of the true class, mean/std over repetitions
  std::array<std::array<double, 2>, 2> confusion_mean{};
  std::array<std::array<double, 2>, 2> confusion_std{};
  std::size_t dropped_images = 0;
  bool std_reported = true;
};

inline std::pair<double, double> mean_std(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

// Accuracy and confusion rates as pure functions of the prediction log.
inline EvalReport summarize(std::span<const PredictionRow> log, const std::array<std::string, 2>& classes, int reps) {
  EvalReport rep;
  rep.classes = classes;
  std::vector<std::array<std::array<std::size_t, 2>, 2>> counts(static_cast<std::size_t>(reps));
  auto class_index = [&](const std::string& name) -> int {
    if (name == classes[0]) return 0;
    if (name == classes[1]) return 1;
    throw DataError("prediction log label '" + name + "' is not one of the report classes");
  };
  for (const auto& row : log) {
    if (row.repetition < 0 || row.repetition >= reps) throw DataError("prediction log repetition out of range");
    ++counts[static_cast<std::size_t>(row.repetition)][class_index(row.true_label)][class_index(row.predicted_label)];
  }
  std::array<std::array<std::vector<double>, 2>, 2> rates;
  for (const auto& c : counts) {
    const std::size_t total = c[0][0] + c[0][1] + c[1][0] + c[1][1];
    rep.per_rep_test_images.push_back(total);
    rep.per_rep_accuracy.push_back(total ? 100.0 * static_cast<double>(c[0][0] + c[1][1]) / static_cast<double>(total)
                                         : 0.0);
    for (int t = 0; t < 2; ++t) {
      const std::size_t row_total = c[t][0] + c[t][1];
      if (!row_total) continue;
      for (int p = 0; p < 2; ++p)
        rates[t][p].push_back(100.0 * static_cast<double>(c[t][p]) / static_cast<double>(row_total));
    }
  }
  std::tie(rep.mean, rep.std) = mean_std(rep.per_rep_accuracy);
  for (int t = 0; t < 2; ++t)
    for (int p = 0; p < 2; ++p) std::tie(rep.confusion_mean[t][p], rep.confusion_std[t][p]) = mean_std(rates[t][p]);
  return rep;
}

struct ExperimentResult {
  EvalReport report;
  std::vector<SvmModel> models;
  std::vector<PredictionRow> log;
  std::vector<std::string> dropped;  // "path: reason"
};

namespace detail {

inline std::vector<std::size_t> rows_for_subjects(const DatasetManifest& m, Attribute a,
                                                  const std::set<std::string>& subjects) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (attribute_label(m.records[i], a) && subjects.count(m.records[i].subject_id)) rows.push_back(i);
  return rows;
}

inline std::vector<std::size_t> labelled_rows(const DatasetManifest& m, Attribute a) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (attribute_label(m.records[i], a)) rows.push_back(i);
  return rows;
}

// Runtime guard on the realized image sets, independent of the plan.
inline void assert_subject_disjoint(const DatasetManifest& train_m, std::span<const std::size_t> train_rows,
                                    const DatasetManifest& test_m, std::span<const std::size_t> test_rows) {
  std::set<std::string> train_subjects;
  for (auto r : train_rows) train_subjects.insert(train_m.records[r].subject_id);
  for (auto r : test_rows)
    if (train_subjects.count(test_m.records[r].subject_id))
      throw std::logic_error("subject " + test_m.records[r].subject_id + " appears in both train and test images");
}

inline SvmModel train_on_rows(const DatasetManifest& m, Attribute a, const FeatureTable& table,
                              std::span<const std::size_t> rows, const SvmTrainConfig& cfg, std::size_t* used) {
  std::vector<const FeatureVector*> x;
  std::vector<int> y;
  for (auto r : rows) {
    if (!table.rows[r]) continue;
    x.push_back(&*table.rows[r]);
    y.push_back(*attribute_label(m.records[r], a));
  }
  if (used) *used = x.size();
  return train_svm(std::span<const FeatureVector* const>(x), y, attribute_classes(a), cfg);
}

inline PredictionRow score(const SvmModel& model, const SampleRecord& rec, Attribute a, const FeatureVector& fv,
                           int repetition) {
  const auto p = predict(model, fv);
  const auto classes = attribute_classes(a);
  return {rec.image_path, repetition, classes[*attribute_label(rec, a) > 0 ? 1 : 0], p.label, p.decision};
}

inline std::vector<std::string> dropped_messages(const FeatureTable& t) {
  std::vector<std::string> out;
  for (const auto& [row, msg] : t.errors) out.push_back(msg);
  return out;
}

}  // namespace detail

// Trains one model per repetition and scores that repetition's test images.
inline ExperimentResult run_experiment(const DatasetManifest& m, const SplitPlan& plan, const FeatureExtractor& ex,
                                       const SvmTrainConfig& svm_cfg = {}, unsigned threads = 0) {
  const Attribute a = plan.attribute;
  const int reps = static_cast<int>(plan.repetitions.size());
  std::vector<std::vector<std::size_t>> train_rows, test_rows;
  std::set<std::size_t> needed;
  for (const auto& rep : plan.repetitions) {
    train_rows.push_back(detail::rows_for_subjects(m, a, rep.train_subjects));
    test_rows.push_back(detail::rows_for_subjects(m, a, rep.test_subjects));
    detail::assert_subject_disjoint(m, train_rows.back(), m, test_rows.back());
    needed.insert(train_rows.back().begin(), train_rows.back().end());
    needed.insert(test_rows.back().begin(), test_rows.back().end());
  }
  FeatureTable table;
  const std::vector<std::size_t> needed_rows(needed.begin(), needed.end());
  fill_features(table, m, needed_rows, ex, 0.0, threads);

  ExperimentResult result;
  result.models.resize(static_cast<std::size_t>(reps));
  std::vector<std::size_t> train_used(static_cast<std::size_t>(reps));
  std::vector<std::vector<PredictionRow>> logs(static_cast<std::size_t>(reps));
  detail::parallel_for(
      static_cast<std::size_t>(reps),
      [&](std::size_t r) {
        result.models[r] = detail::train_on_rows(m, a, table, train_rows[r], svm_cfg, &train_used[r]);
        for (auto row : test_rows[r])
          if (table.rows[row])
            logs[r].push_back(detail::score(result.models[r], m.records[row], a, *table.rows[row], static_cast<int>(r)));
      },
      threads);
  for (auto& l : logs) result.log.insert(result.log.end(), l.begin(), l.end());
  result.report = summarize(result.log, attribute_classes(a), reps);
  result.report.per_rep_train_images = train_used;
  result.dropped = detail::dropped_messages(table);
  result.report.dropped_images = result.dropped.size();
  return result;
}

// Every model scores every labelled image of another manifest.
inline ExperimentResult cross_dataset_eval(std::span<const SvmModel> models, const DatasetManifest& other,
                                           Attribute a, const FeatureExtractor& ex, unsigned threads = 0) {
  for (const auto& model : models)
    if (model.fingerprint != ex.fingerprint())
      throw DataError("model fingerprint " + model.fingerprint.to_string() + " does not match extractor " +
                      ex.fingerprint().to_string());
  const auto rows = detail::labelled_rows(other, a);
  FeatureTable table;
  fill_features(table, other, rows, ex, 0.0, threads);
  ExperimentResult result;
  result.models.assign(models.begin(), models.end());
  for (std::size_t r = 0; r < models.size(); ++r)
    for (auto row : rows)
      if (table.rows[row])
        result.log.push_back(detail::score(models[r], other.records[row], a, *table.rows[row], static_cast<int>(r)));
  result.report = summarize(result.log, attribute_classes(a), static_cast<int>(models.size()));
  result.dropped = detail::dropped_messages(table);
  result.report.dropped_images = result.dropped.size();
  return result;
}

// Trains on one subgroup, tests on another. Models come from a balanced
// split plan over the training subgroup. If the two subgroups share subjects
// the test images are restricted to each repetition's held-out subjects;
// otherwise every model scores the whole test subgroup.
inline ExperimentResult subgroup_experiment(const DatasetManifest& m, const RecordPredicate& train_filter,
                                            const RecordPredicate& test_filter, Attribute a,
                                            const FeatureExtractor& ex, const SvmTrainConfig& svm_cfg = {},
                                            int reps = 5, std::uint64_t seed = 0, double train_frac = 0.6,
                                            unsigned threads = 0) {
  const auto train_m = filter(m, train_filter);
  const auto test_m = filter(m, test_filter);
  if (train_m.empty()) throw DataError("training subgroup is empty");
  if (test_m.empty()) throw DataError("test subgroup is empty");
  const auto train_classes = detail::subjects_by_class(train_m, a);
  if (train_classes[0].empty() || train_classes[1].empty())
    throw DataError("training subgroup holds a single " + std::string(to_string(a)) + " class");
  const auto test_rows_all = detail::labelled_rows(test_m, a);
  if (test_rows_all.empty()) throw DataError("test subgroup has no labelled images");

  const auto train_subjects = subjects(train_m);
  bool overlap = false;
  for (const auto& r : test_m.records) overlap = overlap || train_subjects.count(r.subject_id) > 0;

  const auto plan = make_splits(train_m, a, train_frac, reps, seed);
  FeatureTable train_table;
  {
    std::set<std::size_t> needed;
    for (const auto& rep : plan.repetitions) {
      const auto rows = detail::rows_for_subjects(train_m, a, rep.train_subjects);
      needed.insert(rows.begin(), rows.end());
    }
    fill_features(train_table, train_m, std::vector<std::size_t>(needed.begin(), needed.end()), ex, 0.0, threads);
  }
  FeatureTable test_table;
  fill_features(test_table, test_m, test_rows_all, ex, 0.0, threads);

  ExperimentResult result;
  result.models.resize(static_cast<std::size_t>(reps));
  std::vector<std::size_t> train_used(static_cast<std::size_t>(reps));
  std::vector<std::vector<PredictionRow>> logs(static_cast<std::size_t>(reps));
  for (std::size_t r = 0; r < static_cast<std::size_t>(reps); ++r) {
    const auto& rep = plan.repetitions[r];
    const auto train_rows = detail::rows_for_subjects(train_m, a, rep.train_subjects);
    std::vector<std::size_t> test_rows;
    for (auto row : test_rows_all) {
      const auto& sid = test_m.records[row].subject_id;
      if (!overlap || (rep.test_subjects.count(sid) && !rep.train_subjects.count(sid))) test_rows.push_back(row);
    }
    detail::assert_subject_disjoint(train_m, train_rows, test_m, test_rows);
    result.models[r] = detail::train_on_rows(train_m, a, train_table, train_rows, svm_cfg, &train_used[r]);
    for (auto row : test_rows)
      if (test_table.rows[row])
        logs[r].push_back(detail::score(result.models[r], test_m.records[row], a, *test_table.rows[row],
                                        static_cast<int>(r)));
  }
  for (auto& l : logs) result.log.insert(result.log.end(), l.begin(), l.end());
  result.report = summarize(result.log, attribute_classes(a), reps);
  result.report.per_rep_train_images = train_used;
  result.report.std_reported = overlap;
  result.dropped = detail::dropped_messages(train_table);
  const auto test_dropped = detail::dropped_messages(test_table);
  result.dropped.insert(result.dropped.end(), test_dropped.begin(), test_dropped.end());
  result.report.dropped_images = result.dropped.size();
  return result;
}

inline constexpr std::array<double, 5> kBlurSigmas{2.0, 4.0, 6.0, 8.0, 10.0};

struct BlurLevel {
  double sigma = 0.0;
  EvalReport report;
  std::vector<PredictionRow> log;
};

struct BlurResult {
  ExperimentResult baseline;     // sigma = 0, also holds the models
  std::vector<BlurLevel> levels;  // one per requested sigma
};

// Models are trained once on unblurred images; only test images are blurred.
inline BlurResult blur_experiment(const DatasetManifest& m, const SplitPlan& plan, const FeatureExtractor& ex,
                                  std::span<const double> sigmas, const SvmTrainConfig& svm_cfg = {},
                                  unsigned threads = 0) {
  BlurResult out;
  out.baseline = run_experiment(m, plan, ex, svm_cfg, threads);
  const Attribute a = plan.attribute;
  const int reps = static_cast<int>(plan.repetitions.size());
  std::vector<std::vector<std::size_t>> test_rows;
  std::set<std::size_t> needed;
  for (const auto& rep : plan.repetitions) {
    test_rows.push_back(detail::rows_for_subjects(m, a, rep.test_subjects));
    needed.insert(test_rows.back().begin(), test_rows.back().end());
  }
  const std::vector<std::size_t> needed_rows(needed.begin(), needed.end());
  for (double sigma : sigmas) {
    if (!(sigma > 0.0)) throw DataError("blur sigmas must be > 0 (the unblurred baseline is always included)");
    FeatureTable table;
    fill_features(table, m, needed_rows, ex, sigma, threads);
    BlurLevel level;
    level.sigma = sigma;
    for (int r = 0; r < reps; ++r)
      for (auto row : test_rows[static_cast<std::size_t>(r)])
        if (table.rows[row])
          level.log.push_back(detail::score(out.baseline.models[static_cast<std::size_t>(r)], m.records[row], a,
                                            *table.rows[row], r));
    level.report = summarize(level.log, attribute_classes(a), reps);
    level.report.per_rep_train_images = out.baseline.report.per_rep_train_images;
    level.report.dropped_images = table.errors.size();
    out.levels.push_back(std::move(level));
  }
  return out;
}

struct Stratum {
  std::string value;
  std::vector<double> per_rep_accuracy;  // repetitions with at least one image of this value
  std::vector<std::size_t> per_rep_images;  // every repetition, zeros included
  double mean = 0.0;
  double std = 0.0;
};

struct StrataTable {
  Field field = Field::EyeColor;
  std::vector<Stratum> strata;
  std::vector<std::string> notes;
};

// Per-value accuracy over repetitions, from the prediction log. Values that
// occur in the manifest but never among test images are omitted with a note.
inline StrataTable stratified_report(std::span<const PredictionRow> log, const DatasetManifest& m, Field field,
                                     int reps) {
  std::map<std::string, const SampleRecord*> by_path;
  std::set<std::string> all_values;
  for (const auto& r : m.records) {
    by_path[r.image_path] = &r;
    all_values.insert(field_value(r, field));
  }
  std::map<std::string, std::vector<std::array<std::size_t, 2>>> tally;  // value -> per rep {correct, total}
  for (const auto& row : log) {
    const auto it = by_path.find(row.image_path);
    if (it == by_path.end()) throw DataError("prediction log image '" + row.image_path + "' not in manifest");
    auto& t = tally[field_value(*it->second, field)];
    t.resize(static_cast<std::size_t>(reps));
    auto& cell = t.at(static_cast<std::size_t>(row.repetition));
    cell[1] += 1;
    cell[0] += row.predicted_label == row.true_label ? 1 : 0;
  }
  StrataTable out;
  out.field = field;
  for (const auto& value : all_values) {
    const auto it = tally.find(value);
    if (it == tally.end()) {
      out.notes.push_back(std::string(to_string(field)) + "=" + value + ": no test images, omitted");
      continue;
    }
    Stratum s;
    s.value = value;
    for (const auto& [correct, total] : it->second) {
      s.per_rep_images.push_back(total);
      if (total) s.per_rep_accuracy.push_back(100.0 * static_cast<double>(correct) / static_cast<double>(total));
    }
    std::tie(s.mean, s.std) = mean_std(s.per_rep_accuracy);
    out.strata.push_back(std::move(s));
  }
  return out;
}

}  // namespace ocular
