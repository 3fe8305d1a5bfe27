#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ocular/detail/binary_io.hpp"
#include "ocular/features.hpp"

namespace ocular {

struct SvmTrainConfig {
  double C = 1.0;
  double tol = 1e-4;      // relative duality gap at which training stops
  int max_iter = 10'000;  // epochs
  std::uint64_t seed = 0;
  double bias_feature = 1.0;  // constant appended to every input; b = w_bias * bias_feature

  void validate() const {
    if (!(C > 0.0)) throw DataError("SVM C must be > 0");
    if (!(tol > 0.0)) throw DataError("SVM tol must be > 0");
    if (max_iter < 1) throw DataError("SVM max_iter must be >= 1");
    if (!(bias_feature > 0.0)) throw DataError("SVM bias feature must be > 0");
  }
  bool operator==(const SvmTrainConfig&) const = default;
};

struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::array<std::string, 2> labels;  // [0] for decision < 0, [1] for decision >= 0
  SvmTrainConfig config;
  FeatureFingerprint fingerprint;
  int epochs = 0;
  double duality_gap = 0.0;

  bool operator==(const SvmModel&) const = default;
};

// Per-epoch solver record.
struct SvmTrace {
  std::vector<double> dual_objective;  // 0.5 |w|^2 - sum(alpha), minimization form
  std::vector<double> duality_gap;
  bool converged = false;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// L2-regularized L1-hinge linear SVM by dual coordinate descent. y holds +1/-1;
// labels[1] names the +1 class.
inline SvmModel train_svm(std::span<const FeatureVector* const> x, std::span<const int> y,
                          const std::array<std::string, 2>& labels, const SvmTrainConfig& cfg = {},
                          SvmTrace* trace = nullptr) {
  cfg.validate();
  if (x.size() != y.size()) throw DataError("feature and label counts differ");
  if (x.empty()) throw DataError("no training examples");
  if (labels[0] == labels[1]) throw DataError("class names must be distinct");
  const auto fp = x.front()->fingerprint();
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]->fingerprint() != fp)
      throw DataError("feature " + std::to_string(i) + " has fingerprint " + x[i]->fingerprint().to_string() +
                      ", expected " + fp.to_string());
    if (y[i] == 1) has_pos = true;
    else if (y[i] == -1) has_neg = true;
    else throw DataError("labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw DataError("training data holds a single class");

  const std::size_t l = x.size();
  const std::size_t d = fp.dim;
  const double bf = cfg.bias_feature;
  const std::vector<double> yd(y.begin(), y.end());

  // Label-signed Gram matrix of the bias-augmented inputs. The solver works on
  // the dual gradient g = Q alpha - 1, so one coordinate step costs O(l).
  std::vector<double> q(l * l);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      q[i * l + j] = q[j * l + i] = yd[i] * yd[j] * (detail::dot(x[i]->values, x[j]->values) + bf * bf);

  std::vector<double> alpha(l, 0.0);
  std::vector<double> g(l, -1.0);
  std::vector<std::size_t> order(l);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  // Primal and dual objectives from alpha and g; |w|^2 = alpha' Q alpha.
  auto objectives = [&](double& primal, double& dual_min) {
    double quad = 0.0, alpha_sum = 0.0, hinge = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
      quad += alpha[i] * (g[i] + 1.0);
      alpha_sum += alpha[i];
      hinge += std::max(0.0, -g[i]);
    }
    primal = 0.5 * quad + cfg.C * hinge;
    dual_min = 0.5 * quad - alpha_sum;
  };
  auto refresh_gradient = [&] {
    for (std::size_t i = 0; i < l; ++i) {
      double v = -1.0;
      for (std::size_t j = 0; j < l; ++j) v += q[i * l + j] * alpha[j];
      g[i] = v;
    }
  };

  SvmModel model;
  model.labels = labels;
  model.config = cfg;
  model.fingerprint = fp;

  double gap = 0.0;
  bool converged = false;
  int epoch = 0;
  while (epoch < cfg.max_iter) {
    ++epoch;
    for (std::size_t j = l - 1; j > 0; --j)
      std::swap(order[j], order[std::uniform_int_distribution<std::size_t>(0, j)(rng)]);
    for (std::size_t i : order) {
      double pg = g[i];
      if (alpha[i] == 0.0) pg = std::min(pg, 0.0);
      else if (alpha[i] == cfg.C) pg = std::max(pg, 0.0);
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g[i] / q[i * l + i], 0.0, cfg.C);
      const double step = alpha[i] - old;
      if (step == 0.0) continue;
      const double* qi = q.data() + i * l;
      for (std::size_t k = 0; k < l; ++k) g[k] += step * qi[k];
    }
    if (epoch % 64 == 0) refresh_gradient();  // bound drift of the running gradient

    double primal = 0.0, dual_min = 0.0;
    objectives(primal, dual_min);
    gap = primal + dual_min;
    if (gap <= cfg.tol * std::max(1.0, primal)) {
      refresh_gradient();
      objectives(primal, dual_min);
      gap = primal + dual_min;
      converged = gap <= cfg.tol * std::max(1.0, primal);
    }
    if (trace) {
      trace->dual_objective.push_back(dual_min);
      trace->duality_gap.push_back(gap);
    }
    if (converged) break;
  }
  if (trace) trace->converged = converged;

  std::vector<double> w(d, 0.0);
  double wb = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    if (alpha[i] == 0.0) continue;
    const double c = alpha[i] * yd[i];
    const auto& xi = x[i]->values;
    for (std::size_t k = 0; k < d; ++k) w[k] += c * xi[k];
    wb += c * bf;
  }

  model.weights = std::move(w);
  model.bias = wb * bf;
  model.epochs = epoch;
  model.duality_gap = gap;
  return model;
}

inline SvmModel train_svm(std::span<const FeatureVector> x, std::span<const int> y,
                          const std::array<std::string, 2>& labels, const SvmTrainConfig& cfg = {},
                          SvmTrace* trace = nullptr) {
  std::vector<const FeatureVector*> ptrs;
  ptrs.reserve(x.size());
  for (const auto& v : x) ptrs.push_back(&v);
  return train_svm(std::span<const FeatureVector* const>(ptrs), y, labels, cfg, trace);
}

struct Prediction {
  std::string label;
  double decision = 0.0;
};

inline double decision_value(const SvmModel& m, const FeatureVector& x) {
  if (x.fingerprint() != m.fingerprint)
    throw DataError("feature fingerprint " + x.fingerprint().to_string() + " does not match model " +
                    m.fingerprint.to_string());
  return detail::dot(m.weights, x.values) + m.bias;
}

inline Prediction predict(const SvmModel& m, const FeatureVector& x) {
  const double v = decision_value(m, x);
  return {v >= 0.0 ? m.labels[1] : m.labels[0], v};
}

inline constexpr std::uint16_t kModelVersion = 1;

inline std::vector<std::uint8_t> encode_model(const SvmModel& m) {
  detail::ByteWriter w;
  w.put_raw("OSVM");
  w.put(kModelVersion);
  w.put_string(m.fingerprint.descriptor);
  w.put(static_cast<std::uint8_t>(m.fingerprint.region));
  w.put(static_cast<std::uint64_t>(m.fingerprint.dim));
  w.put_string(m.labels[0]);
  w.put_string(m.labels[1]);
  w.put(m.config.C);
  w.put(m.config.tol);
  w.put(static_cast<std::uint32_t>(m.config.max_iter));
  w.put(m.config.seed);
  w.put(m.config.bias_feature);
  w.put(static_cast<std::uint32_t>(m.epochs));
  w.put(m.duality_gap);
  w.put(static_cast<std::uint64_t>(m.weights.size()));
  for (double v : m.weights) w.put(v);
  w.put(m.bias);
  w.put(detail::crc32(w.bytes()));
  return std::move(w.bytes());
}

inline SvmModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 10) throw FormatError("model file truncated", bytes.size());
  if (std::string(bytes.begin(), bytes.begin() + 4) != "OSVM") throw FormatError("bad model magic", 0);
  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  if (detail::crc32(body) != stored) throw FormatError("model checksum mismatch (corrupt or truncated)", body.size());

  detail::ByteReader r(body);
  r.get_raw(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kModelVersion) throw FormatError("unsupported model version " + std::to_string(version), 4);
  SvmModel m;
  m.fingerprint.descriptor = r.get_string();
  const std::size_t region_at = r.offset();
  const auto region = r.get<std::uint8_t>();
  if (region > 2) throw FormatError("bad region tag", region_at);
  m.fingerprint.region = static_cast<RegionSelector>(region);
  m.fingerprint.dim = r.get<std::uint64_t>();
  m.labels[0] = r.get_string();
  m.labels[1] = r.get_string();
  m.config.C = r.get<double>();
  m.config.tol = r.get<double>();
  m.config.max_iter = static_cast<int>(r.get<std::uint32_t>());
  m.config.seed = r.get<std::uint64_t>();
  m.config.bias_feature = r.get<double>();
  m.epochs = static_cast<int>(r.get<std::uint32_t>());
  m.duality_gap = r.get<double>();
  const auto dim_at = r.offset();
  const auto dim = r.get<std::uint64_t>();
  if (dim != m.fingerprint.dim) throw FormatError("weight count disagrees with fingerprint", dim_at);
  if (dim * sizeof(double) + sizeof(double) != r.remaining()) throw FormatError("weight payload size mismatch", r.offset());
  m.weights.resize(dim);
  for (auto& v : m.weights) v = r.get<double>();
  m.bias = r.get<double>();
  r.expect_end();
  return m;
}

inline void save_model(const SvmModel& m, const std::filesystem::path& path) { detail::write_file(path, encode_model(m)); }

inline SvmModel load_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return decode_model(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace ocular
