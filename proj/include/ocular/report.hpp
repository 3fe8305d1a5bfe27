#pragma once

#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ocular/eval.hpp"

namespace ocular {

namespace detail {

inline std::string fixed(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Human-readable report: key/value header, per-repetition table, confusion rates.
inline std::string report_text(const EvalReport& r, const KeyValues& header = {}) {
  std::string s;
  for (const auto& [k, v] : header) s += k + ": " + v + "\n";
  s += "repetitions: " + std::to_string(r.per_rep_accuracy.size()) + "\n";
  s += "accuracy_mean_percent: " + detail::fixed(r.mean) + "\n";
  if (r.std_reported) s += "accuracy_std_percent: " + detail::fixed(r.std) + " (population std over repetitions)\n";
  s += "dropped_images: " + std::to_string(r.dropped_images) + "\n\n";
  s += "repetition  train_images  test_images  accuracy_percent\n";
  for (std::size_t i = 0; i < r.per_rep_accuracy.size(); ++i) {
    const std::string train = i < r.per_rep_train_images.size() ? std::to_string(r.per_rep_train_images[i]) : "-";
    s += std::to_string(i) + "  " + train + "  " + std::to_string(r.per_rep_test_images[i]) + "  " +
         detail::fixed(r.per_rep_accuracy[i]) + "\n";
  }
  s += "\nconfusion (row = true class, percent predicted as column)\n";
  s += "true\\predicted  " + r.classes[0] + "  " + r.classes[1] + "\n";
  for (int t = 0; t < 2; ++t) {
    s += r.classes[t];
    for (int p = 0; p < 2; ++p) {
      s += "  " + detail::fixed(r.confusion_mean[t][p], 2);
      if (r.std_reported) s += "+-" + detail::fixed(r.confusion_std[t][p], 2);
    }
    s += "\n";
  }
  return s;
}

inline std::string report_csv(const EvalReport& r) {
  std::string s = "repetition,train_images,test_images,accuracy_percent\n";
  for (std::size_t i = 0; i < r.per_rep_accuracy.size(); ++i) {
    const std::string train = i < r.per_rep_train_images.size() ? std::to_string(r.per_rep_train_images[i]) : "";
    s += std::to_string(i) + "," + train + "," + std::to_string(r.per_rep_test_images[i]) + "," +
         detail::fixed(r.per_rep_accuracy[i], 6) + "\n";
  }
  s += "mean,,," + detail::fixed(r.mean, 6) + "\n";
  s += "std,,," + detail::fixed(r.std, 6) + "\n";
  return s;
}

inline std::string prediction_log_csv(std::span<const PredictionRow> log) {
  std::string s = "image_path,repetition,true_label,predicted_label,decision_value\n";
  for (const auto& row : log)
    s += detail::csv_escape(row.image_path) + "," + std::to_string(row.repetition) + "," + row.true_label + "," +
         row.predicted_label + "," + detail::exact(row.decision_value) + "\n";
  return s;
}

inline std::vector<PredictionRow> parse_prediction_log(std::string_view text) {
  const auto rows = detail::parse_csv(text);
  if (rows.empty() || rows[0].fields != std::vector<std::string>{"image_path", "repetition", "true_label",
                                                                  "predicted_label", "decision_value"})
    throw DataError("prediction log: bad header");
  std::vector<PredictionRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    if (f.size() != 5) throw DataError("prediction log row " + std::to_string(rows[i].line) + ": expected 5 columns");
    const auto rep = detail::parse_double(f[1]);
    const auto dv = detail::parse_double(f[4]);
    if (!rep || !dv) throw DataError("prediction log row " + std::to_string(rows[i].line) + ": bad number");
    out.push_back({f[0], static_cast<int>(*rep), f[2], f[3], *dv});
  }
  return out;
}

inline std::string strata_text(const StrataTable& t) {
  std::string s = "stratified by " + std::string(to_string(t.field)) + "\n";
  s += "value  mean_accuracy_percent  std_percent  images_per_repetition\n";
  for (const auto& st : t.strata) {
    s += st.value + "  " + detail::fixed(st.mean) + "  " + detail::fixed(st.std) + "  ";
    for (std::size_t i = 0; i < st.per_rep_images.size(); ++i) s += (i ? "/" : "") + std::to_string(st.per_rep_images[i]);
    s += "\n";
  }
  for (const auto& n : t.notes) s += "note: " + n + "\n";
  return s;
}

inline std::string strata_csv(const StrataTable& t) {
  std::string s = std::string(to_string(t.field)) + ",mean_accuracy_percent,std_percent,total_images\n";
  for (const auto& st : t.strata) {
    std::size_t total = 0;
    for (auto n : st.per_rep_images) total += n;
    s += detail::csv_escape(st.value) + "," + detail::fixed(st.mean, 6) + "," + detail::fixed(st.std, 6) + "," +
         std::to_string(total) + "\n";
  }
  return s;
}

}  // namespace ocular
