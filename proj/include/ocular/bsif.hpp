#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "ocular/code_image.hpp"
#include "ocular/detail/binary_io.hpp"
#include "ocular/image.hpp"

namespace ocular {

// n learned k x k filters, row-major, filter 0 maps to the most significant bit.
class FilterBank {
 public:
  FilterBank(int k, int n, std::vector<double> coeffs) : k_(k), n_(n), coeffs_(std::move(coeffs)) {
    if (k < 3 || k > 17 || k % 2 == 0) throw DataError("BSIF filter size must be odd in [3, 17]");
    if (n < 1 || n > 16) throw DataError("BSIF bit count must be in [1, 16]");
    if (coeffs_.size() != static_cast<std::size_t>(n) * k * k)
      throw DataError("filter bank holds " + std::to_string(coeffs_.size()) + " coefficients, expected " +
                      std::to_string(n * k * k));
  }

  int k() const noexcept { return k_; }
  int n() const noexcept { return n_; }
  int cardinality() const noexcept { return 1 << n_; }

  std::span<const double> filter(int i) const noexcept {
    return std::span<const double>(coeffs_).subspan(static_cast<std::size_t>(i) * k_ * k_,
                                                    static_cast<std::size_t>(k_) * k_);
  }
  std::span<const double> coefficients() const noexcept { return coeffs_; }

  bool operator==(const FilterBank&) const = default;

 private:
  int k_;
  int n_;
  std::vector<double> coeffs_;
};

inline constexpr std::uint16_t kFilterBankVersion = 1;

inline std::vector<std::uint8_t> encode_filter_bank(const FilterBank& bank) {
  detail::ByteWriter w;
  w.put_raw("BSIF");
  w.put(kFilterBankVersion);
  w.put(static_cast<std::uint16_t>(bank.k()));
  w.put(static_cast<std::uint16_t>(bank.n()));
  for (double c : bank.coefficients()) w.put(c);
  return std::move(w.bytes());
}

inline FilterBank decode_filter_bank(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (r.get_raw(4) != "BSIF") throw FormatError("bad filter bank magic", 0);
  const auto version = r.get<std::uint16_t>();
  if (version != kFilterBankVersion) throw FormatError("unsupported filter bank version " + std::to_string(version), 4);
  const int k = r.get<std::uint16_t>();
  const int n = r.get<std::uint16_t>();
  if (k < 3 || k > 17 || k % 2 == 0 || n < 1 || n > 16) throw FormatError("invalid filter bank shape", 6);
  std::vector<double> coeffs(static_cast<std::size_t>(n) * k * k);
  for (auto& c : coeffs) c = r.get<double>();
  r.expect_end();
  return FilterBank(k, n, std::move(coeffs));
}

inline void save_filter_bank(const FilterBank& bank, const std::filesystem::path& path) {
  detail::write_file(path, encode_filter_bank(bank));
}

inline FilterBank load_filter_bank(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return decode_filter_bank(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

struct BsifLearnOptions {
  std::size_t patches = 50'000;
  double tolerance = 1e-6;
  int max_iterations = 1'000;
};

namespace detail {

// Symmetric orthogonalization W <- (W W^T)^{-1/2} W.
inline Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

// Samples `count` distinct patch positions, returned as sorted global indices.
inline std::vector<std::uint64_t> sample_distinct(std::uint64_t total, std::size_t count, std::mt19937_64& rng) {
  // Floyd's algorithm
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count * 2);
  for (std::uint64_t j = total - count; j < total; ++j) {
    const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Mean-removed k x k patches as columns.
inline Eigen::MatrixXd sample_patches(std::span<const GrayImage> images, int k, std::size_t count, std::uint64_t seed) {
  std::vector<std::uint64_t> per_image;
  std::uint64_t total = 0;
  for (const auto& img : images) {
    const std::uint64_t nx = img.width() >= k ? static_cast<std::uint64_t>(img.width() - k + 1) : 0;
    const std::uint64_t ny = img.height() >= k ? static_cast<std::uint64_t>(img.height() - k + 1) : 0;
    per_image.push_back(nx * ny);
    total += nx * ny;
  }
  if (total < count)
    throw DataError("insufficient patch supply: " + std::to_string(total) + " distinct " + std::to_string(k) + "x" +
                    std::to_string(k) + " positions, need " + std::to_string(count));
  std::mt19937_64 rng(seed);
  const auto picks = detail::sample_distinct(total, count, rng);

  const int dim = k * k;
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(count));
  std::size_t img_idx = 0;
  std::uint64_t img_base = 0;
  for (std::size_t c = 0; c < picks.size(); ++c) {
    while (picks[c] >= img_base + per_image[img_idx]) img_base += per_image[img_idx++];
    const auto& img = images[img_idx];
    const std::uint64_t local = picks[c] - img_base;
    const int nx = img.width() - k + 1;
    const int px = static_cast<int>(local % static_cast<std::uint64_t>(nx));
    const int py = static_cast<int>(local / static_cast<std::uint64_t>(nx));
    double sum = 0.0;
    for (int dy = 0; dy < k; ++dy)
      for (int dx = 0; dx < k; ++dx) {
        const double v = img(px + dx, py + dy);
        x(dy * k + dx, static_cast<Eigen::Index>(c)) = v;
        sum += v;
      }
    x.col(static_cast<Eigen::Index>(c)).array() -= sum / dim;
  }
  return x;
}

// PCA whitening to the top n components followed by symmetric fixed-point
// ICA with a tanh contrast.
inline FilterBank learn_bsif_filters(std::span<const GrayImage> images, int k, int n, std::uint64_t seed,
                                     const BsifLearnOptions& opt = {}) {
  if (k < 3 || k > 17 || k % 2 == 0) throw DataError("BSIF filter size must be odd in [3, 17]");
  if (n < 5 || n > 12) throw DataError("BSIF bit count must be in [5, 12]");
  // per-patch mean removal leaves k*k - 1 degrees of freedom
  if (n > k * k - 1) throw DataError("n = " + std::to_string(n) + " exceeds the k*k - 1 patch subspace for k = " +
                                     std::to_string(k));
  if (images.empty()) throw DataError("no training images for filter learning");

  Eigen::MatrixXd x = sample_patches(images, k, opt.patches, seed);
  const auto samples = static_cast<double>(x.cols());
  const Eigen::VectorXd mean = x.rowwise().mean();
  x.colwise() -= mean;
  const Eigen::MatrixXd cov = (x * x.transpose()) / samples;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pca(cov);
  if (pca.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");

  const int dim = k * k;
  Eigen::MatrixXd whiten(n, dim);
  for (int i = 0; i < n; ++i) {
    const int col = dim - 1 - i;  // eigenvalues ascend
    const double lambda = pca.eigenvalues()(col);
    if (!(lambda > 1e-12)) throw NumericError("degenerate patch covariance: component " + std::to_string(i));
    whiten.row(i) = pca.eigenvectors().col(col).transpose() / std::sqrt(lambda);
  }
  const Eigen::MatrixXd z = whiten * x;

  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w(i, j) = gauss(rng);
  w = detail::symmetric_decorrelate(w);

  int iter = 0;
  double change = 1.0;
  for (; iter < opt.max_iterations; ++iter) {
    const Eigen::MatrixXd g = (w * z).array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).rowwise().mean();
    Eigen::MatrixXd w_next = (g * z.transpose()) / samples - g_prime_mean.asDiagonal() * w;
    w_next = detail::symmetric_decorrelate(w_next);
    change = ((w_next * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = std::move(w_next);
    if (change < opt.tolerance) break;
  }
  if (change >= opt.tolerance)
    throw NumericError("ICA did not converge after " + std::to_string(iter) + " iterations (change " +
                       std::to_string(change) + ")");

  Eigen::MatrixXd filters = w * whiten;  // n x k*k, each row one filter
  filters.colwise() -= filters.rowwise().mean();
  std::vector<double> coeffs(static_cast<std::size_t>(n) * dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) coeffs[static_cast<std::size_t>(i) * dim + j] = filters(i, j);
  return FilterBank(k, n, std::move(coeffs));
}

// Filter responses with replicate padding. Each window enters relative to
// its centre pixel, sum f * (I(q) - I(p)), which equals the response on the
// mean-removed image for zero-mean filters, is exactly zero on flat windows
// and depends only on pixels inside the window.
inline std::vector<double> bsif_responses(const GrayImage& img, const FilterBank& bank) {
  const int k = bank.k();
  if (img.width() < k || img.height() < k)
    throw DataError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " smaller than the " + std::to_string(k) + "x" + std::to_string(k) + " filters");
  const int w = img.width();
  const int h = img.height();
  const int half = k / 2;
  const int pw = w + 2 * half;
  const int ph = h + 2 * half;

  std::vector<double> padded(static_cast<std::size_t>(pw) * ph);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) padded[static_cast<std::size_t>(y) * pw + x] = img.clamped(x - half, y - half);

  std::vector<double> resp(static_cast<std::size_t>(bank.n()) * w * h, 0.0);
  for (int f = 0; f < bank.n(); ++f) {
    const auto coeff = bank.filter(f);
    double* out = resp.data() + static_cast<std::size_t>(f) * w * h;
    for (int dy = 0; dy < k; ++dy)
      for (int dx = 0; dx < k; ++dx) {
        const double c = coeff[static_cast<std::size_t>(dy) * k + dx];
        for (int y = 0; y < h; ++y) {
          const double* src = padded.data() + static_cast<std::size_t>(y + dy) * pw + dx;
          const double* centre = padded.data() + static_cast<std::size_t>(y + half) * pw + half;
          double* dst = out + static_cast<std::size_t>(y) * w;
          for (int x = 0; x < w; ++x) dst[x] += c * (src[x] - centre[x]);
        }
      }
  }
  return resp;
}

// bit_i = response_i > 0, filter 0 most significant.
inline CodeImage bsif_code_image(const GrayImage& img, const FilterBank& bank) {
  const auto resp = bsif_responses(img, bank);
  const int w = img.width();
  const int h = img.height();
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  CodeImage out(w, h, bank.cardinality());
  auto codes = out.codes();
  for (std::size_t p = 0; p < plane; ++p) {
    unsigned code = 0;
    for (int f = 0; f < bank.n(); ++f) code = (code << 1) | (resp[static_cast<std::size_t>(f) * plane + p] > 0.0 ? 1u : 0u);
    codes[p] = static_cast<std::uint16_t>(code);
  }
  return out;
}

}  // namespace ocular
