#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ocular/align.hpp"
#include "ocular/detail/binary_io.hpp"
#include "ocular/detail/csv.hpp"

namespace ocular {

enum class Eye { L, R };
enum class Gender { Male, Female, Unknown };
enum class Race { Caucasian, NonCaucasian, Unknown };
enum class EyeColor { Brown, Blue, Green, Hazel, Gray, Other, Unknown };

inline constexpr std::array<std::string_view, 2> kEyeNames{"L", "R"};
inline constexpr std::array<std::string_view, 3> kGenderNames{"male", "female", "unknown"};
inline constexpr std::array<std::string_view, 3> kRaceNames{"caucasian", "non_caucasian", "unknown"};
inline constexpr std::array<std::string_view, 7> kEyeColorNames{"brown", "blue", "green", "hazel",
                                                                "gray",  "other", "unknown"};

inline std::string_view to_string(Eye e) noexcept { return kEyeNames[static_cast<std::size_t>(e)]; }
inline std::string_view to_string(Gender g) noexcept { return kGenderNames[static_cast<std::size_t>(g)]; }
inline std::string_view to_string(Race r) noexcept { return kRaceNames[static_cast<std::size_t>(r)]; }
inline std::string_view to_string(EyeColor c) noexcept { return kEyeColorNames[static_cast<std::size_t>(c)]; }

struct SampleRecord {
  std::string image_path;  // relative to the manifest directory unless absolute
  std::string subject_id;
  Eye eye = Eye::L;
  std::string sensor;
  Gender gender = Gender::Unknown;
  Race race = Race::Unknown;
  EyeColor eye_color = EyeColor::Unknown;
  OcularGeometry geometry;
  std::string race_original;  // optional free text, not used by experiments

  bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
  std::string name;
  std::filesystem::path base_dir;
  std::vector<SampleRecord> records;

  std::filesystem::path resolve(const SampleRecord& r) const {
    const std::filesystem::path p(r.image_path);
    return p.is_absolute() ? p : base_dir / p;
  }
  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

inline constexpr std::array<std::string_view, 10> kManifestColumns{
    "image_path", "subject_id", "eye", "sensor", "gender", "race", "eye_color", "iris_x", "iris_y", "iris_r"};
inline constexpr std::string_view kRaceOriginalColumn = "race_original";

namespace detail {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view value, const std::array<std::string_view, N>& names, std::size_t line,
                std::string_view column) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == value) return static_cast<Enum>(i);
  std::string allowed;
  for (auto n : names) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
  throw DataError("row " + std::to_string(line) + ", column \"" + std::string(column) + "\": invalid value \"" +
                  std::string(value) + "\" (expected one of " + allowed + ")");
}

}  // namespace detail

inline DatasetManifest parse_manifest(std::string_view text, std::string name = {},
                                      std::filesystem::path base_dir = {}) {
  const auto rows = detail::parse_csv(text);
  if (rows.empty()) throw DataError("manifest is empty (missing header)");
  const auto& header = rows.front().fields;
  const bool has_original = header.size() == kManifestColumns.size() + 1;
  bool header_ok = header.size() == kManifestColumns.size() || has_original;
  for (std::size_t i = 0; header_ok && i < kManifestColumns.size(); ++i) header_ok = header[i] == kManifestColumns[i];
  if (has_original) header_ok = header_ok && header.back() == kRaceOriginalColumn;
  if (!header_ok) {
    for (std::size_t i = 0; i < kManifestColumns.size(); ++i)
      if (i >= header.size() || header[i] != kManifestColumns[i])
        throw DataError("manifest header: missing column \"" + std::string(kManifestColumns[i]) + "\" at position " +
                        std::to_string(i + 1));
    throw DataError("manifest header: unexpected extra columns");
  }

  DatasetManifest m;
  m.name = std::move(name);
  m.base_dir = std::move(base_dir);
  std::unordered_map<std::string, std::size_t> seen;  // path -> row
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    const std::size_t line = rows[r].line;
    if (f.size() != header.size())
      throw DataError("row " + std::to_string(line) + ": expected " + std::to_string(header.size()) + " columns, got " +
                      std::to_string(f.size()));
    SampleRecord rec;
    rec.image_path = f[0];
    if (rec.image_path.empty()) throw DataError("row " + std::to_string(line) + ", column \"image_path\": empty");
    rec.subject_id = f[1];
    if (rec.subject_id.empty()) throw DataError("row " + std::to_string(line) + ", column \"subject_id\": empty");
    std::string eye = f[2];
    if (eye == "l") eye = "L";
    if (eye == "r") eye = "R";
    rec.eye = detail::parse_enum<Eye>(eye, kEyeNames, line, "eye");
    rec.sensor = f[3];
    rec.gender = detail::parse_enum<Gender>(f[4], kGenderNames, line, "gender");
    rec.race = detail::parse_enum<Race>(f[5], kRaceNames, line, "race");
    rec.eye_color = detail::parse_enum<EyeColor>(f[6], kEyeColorNames, line, "eye_color");
    double* geo[3] = {&rec.geometry.center_x, &rec.geometry.center_y, &rec.geometry.radius};
    for (std::size_t c = 0; c < 3; ++c) {
      const auto v = detail::parse_double(f[7 + c]);
      if (!v || !std::isfinite(*v))
        throw DataError("row " + std::to_string(line) + ", column \"" + std::string(kManifestColumns[7 + c]) +
                        "\": not a number: \"" + f[7 + c] + "\"");
      *geo[c] = *v;
    }
    if (!(rec.geometry.radius > 0.0))
      throw DataError("row " + std::to_string(line) + ", column \"iris_r\": radius must be > 0");
    if (rec.geometry.center_x < 0.0 || rec.geometry.center_y < 0.0)
      throw DataError("row " + std::to_string(line) + ": iris center must be non-negative");
    if (has_original) rec.race_original = f[10];
    const auto [it, fresh] = seen.emplace(rec.image_path, line);
    if (!fresh)
      throw DataError("duplicate image_path \"" + rec.image_path + "\" in rows " + std::to_string(it->second) +
                      " and " + std::to_string(line));
    m.records.push_back(std::move(rec));
  }
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  try {
    return parse_manifest(text, path.stem().string(), path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// Canonical CSV form; parse_manifest inverts it exactly.
inline std::string manifest_to_csv(const DatasetManifest& m) {
  const bool with_original = std::any_of(m.records.begin(), m.records.end(),
                                         [](const SampleRecord& r) { return !r.race_original.empty(); });
  std::string out;
  for (std::size_t i = 0; i < kManifestColumns.size(); ++i) out += (i ? "," : "") + std::string(kManifestColumns[i]);
  if (with_original) out += "," + std::string(kRaceOriginalColumn);
  out += '\n';
  for (const auto& r : m.records) {
    out += detail::csv_escape(r.image_path) + ',' + detail::csv_escape(r.subject_id) + ',' +
           std::string(to_string(r.eye)) + ',' + detail::csv_escape(r.sensor) + ',' + std::string(to_string(r.gender)) +
           ',' + std::string(to_string(r.race)) + ',' + std::string(to_string(r.eye_color)) + ',' +
           detail::format_double(r.geometry.center_x) + ',' + detail::format_double(r.geometry.center_y) + ',' +
           detail::format_double(r.geometry.radius);
    if (with_original) out += ',' + detail::csv_escape(r.race_original);
    out += '\n';
  }
  return out;
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  detail::write_text(path, manifest_to_csv(m));
}

// Image files that do not exist, as "row N: path" entries.
inline std::vector<std::string> missing_images(const DatasetManifest& m) {
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (!std::filesystem::is_regular_file(m.resolve(m.records[i])))
      missing.push_back("row " + std::to_string(i + 2) + ": " + m.resolve(m.records[i]).string());
  return missing;
}

inline void validate_manifest(const DatasetManifest& m) {
  const auto missing = missing_images(m);
  if (missing.empty()) return;
  std::string msg = std::to_string(missing.size()) + " image(s) missing:";
  for (const auto& s : missing) msg += "\n  " + s;
  throw DataError(msg);
}

using RecordPredicate = std::function<bool(const SampleRecord&)>;

inline DatasetManifest filter(const DatasetManifest& m, const RecordPredicate& pred) {
  DatasetManifest out{m.name, m.base_dir, {}};
  std::copy_if(m.records.begin(), m.records.end(), std::back_inserter(out.records), pred);
  return out;
}

enum class Field { Subject, Eye, Sensor, Gender, Race, EyeColor };

inline Field parse_field(std::string_view s) {
  if (s == "subject" || s == "subject_id") return Field::Subject;
  if (s == "eye") return Field::Eye;
  if (s == "sensor") return Field::Sensor;
  if (s == "gender") return Field::Gender;
  if (s == "race") return Field::Race;
  if (s == "eye_color") return Field::EyeColor;
  throw DataError("unknown field '" + std::string(s) + "'");
}

inline std::string_view to_string(Field f) noexcept {
  switch (f) {
    case Field::Subject: return "subject_id";
    case Field::Eye: return "eye";
    case Field::Sensor: return "sensor";
    case Field::Gender: return "gender";
    case Field::Race: return "race";
    case Field::EyeColor: return "eye_color";
  }
  return "?";
}

inline std::string field_value(const SampleRecord& r, Field f) {
  switch (f) {
    case Field::Subject: return r.subject_id;
    case Field::Eye: return std::string(to_string(r.eye));
    case Field::Sensor: return r.sensor;
    case Field::Gender: return std::string(to_string(r.gender));
    case Field::Race: return std::string(to_string(r.race));
    case Field::EyeColor: return std::string(to_string(r.eye_color));
  }
  return {};
}

inline RecordPredicate field_equals(Field f, std::string value) {
  return [f, value = std::move(value)](const SampleRecord& r) { return field_value(r, f) == value; };
}

// Parses "field=value[,field=value...]" into a conjunction.
inline RecordPredicate parse_filter(std::string_view expr) {
  std::vector<RecordPredicate> terms;
  while (!expr.empty()) {
    const auto comma = expr.find(',');
    const auto term = expr.substr(0, comma);
    const auto eq = term.find('=');
    if (eq == std::string_view::npos) throw DataError("filter term '" + std::string(term) + "' lacks '='");
    terms.push_back(field_equals(parse_field(term.substr(0, eq)), std::string(term.substr(eq + 1))));
    expr = comma == std::string_view::npos ? std::string_view{} : expr.substr(comma + 1);
  }
  return [terms = std::move(terms)](const SampleRecord& r) {
    return std::all_of(terms.begin(), terms.end(), [&](const RecordPredicate& p) { return p(r); });
  };
}

inline std::set<std::string> subjects(const DatasetManifest& m) {
  std::set<std::string> s;
  for (const auto& r : m.records) s.insert(r.subject_id);
  return s;
}

// Image counts per field value.
inline std::map<std::string, std::size_t> count_by(const DatasetManifest& m, Field f) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : m.records) ++counts[field_value(r, f)];
  return counts;
}

// Distinct subjects per field value.
inline std::map<std::string, std::size_t> subject_count_by(const DatasetManifest& m, Field f) {
  std::map<std::string, std::set<std::string>> sets;
  for (const auto& r : m.records) sets[field_value(r, f)].insert(r.subject_id);
  std::map<std::string, std::size_t> counts;
  for (const auto& [k, v] : sets) counts[k] = v.size();
  return counts;
}

}  // namespace ocular
