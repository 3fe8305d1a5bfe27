#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <random>

#include "bsif_oracle.hpp"
#include "ocular/bsif.hpp"
#include "ocular/synth.hpp"
#include "test_util.hpp"

namespace ocular {
namespace {

using testing::brute_force_bsif;
using testing::random_image;
using testing::TempDir;

FilterBank random_bank(int k, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> c(static_cast<std::size_t>(n * k * k));
  for (auto& v : c) v = g(rng);
  for (int f = 0; f < n; ++f) {
    double mean = 0;
    for (int i = 0; i < k * k; ++i) mean += c[static_cast<std::size_t>(f * k * k + i)];
    mean /= k * k;
    for (int i = 0; i < k * k; ++i) c[static_cast<std::size_t>(f * k * k + i)] -= mean;
  }
  return FilterBank(k, n, std::move(c));
}

TEST(BsifCodeTest, BitsPackMostSignificantFirst) {
  const std::array<bool, 5> bits{true, false, false, true, true};
  EXPECT_EQ(pack_bits_msb_first(bits), 19u);
}

TEST(BsifCodeTest, ResponsePatternGivesCodeNineteen) {
  // filter_i = s_i * (delta - mean); at the impulse every other pixel sits at
  // -255 relative to the centre, so response_i = s_i * 8 * 255 / 9
  const std::array<double, 5> signs{1, -1, -1, 1, 1};
  std::vector<double> c;
  for (double s : signs)
    for (int i = 0; i < 9; ++i) c.push_back(s * ((i == 4 ? 1.0 : 0.0) - 1.0 / 9.0));
  const FilterBank bank(3, 5, c);
  GrayImage img(3, 3, 0);
  img(1, 1) = 255;
  EXPECT_EQ(bsif_code_image(img, bank)(1, 1), 19);
}

TEST(BsifCodeTest, ConstantImageCodesZero) {
  std::mt19937_64 rng(1);
  const auto bank = random_bank(7, 8, rng);
  const auto codes = bsif_code_image(GrayImage(30, 25, 143), bank);
  for (auto c : codes.codes()) ASSERT_EQ(c, 0);
}

TEST(BsifCodeTest, MatchesBruteForceConvolution) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 3 + 2 * (trial % 4);
    const auto bank = random_bank(k, 8, rng);
    const auto img = random_image(32, 32, rng);
    ASSERT_EQ(bsif_code_image(img, bank), brute_force_bsif(img, bank)) << "trial " << trial;
  }
}

TEST(BsifCodeTest, AddingConstantLeavesCodesUnchanged) {
  std::mt19937_64 rng(3);
  const auto bank = random_bank(9, 8, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = random_image(40, 30, rng, 0, 200);
    GrayImage shifted = img;
    for (auto& p : shifted.pixels()) p = static_cast<std::uint8_t>(p + 55);
    ASSERT_EQ(bsif_code_image(img, bank), bsif_code_image(shifted, bank));
  }
}

TEST(BsifCodeTest, RejectsImageSmallerThanFilter) {
  std::mt19937_64 rng(4);
  EXPECT_THROW(bsif_code_image(GrayImage(5, 20), random_bank(7, 5, rng)), DataError);
}

std::vector<GrayImage> white_noise_images(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GrayImage> imgs;
  for (int i = 0; i < count; ++i) imgs.push_back(random_image(128, 128, rng));
  return imgs;
}

class BsifLearnTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    images_ = new std::vector<GrayImage>(white_noise_images(4, 11));
    bank_ = new FilterBank(learn_bsif_filters(*images_, 3, 5, 42));
  }
  static void TearDownTestSuite() {
    delete bank_;
    delete images_;
  }
  static std::vector<GrayImage>* images_;
  static FilterBank* bank_;
};

std::vector<GrayImage>* BsifLearnTest::images_ = nullptr;
FilterBank* BsifLearnTest::bank_ = nullptr;

TEST_F(BsifLearnTest, FiltersAreZeroMean) {
  ASSERT_EQ(bank_->k(), 3);
  ASSERT_EQ(bank_->n(), 5);
  for (int f = 0; f < 5; ++f) {
    double mean = 0;
    for (double c : bank_->filter(f)) mean += c;
    EXPECT_NEAR(mean / 9.0, 0.0, 1e-6);
  }
}

TEST_F(BsifLearnTest, GramMatrixFullRank) {
  Eigen::MatrixXd f(5, 9);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 9; ++j) f(i, j) = bank_->filter(i)[static_cast<std::size_t>(j)];
  Eigen::MatrixXd gram = f * f.transpose();
  gram /= gram.diagonal().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  EXPECT_GT(es.eigenvalues().minCoeff(), 1e-6);
}

TEST_F(BsifLearnTest, DeterministicForSeed) {
  EXPECT_EQ(learn_bsif_filters(*images_, 3, 5, 42), *bank_);
  EXPECT_NE(learn_bsif_filters(*images_, 3, 5, 43), *bank_);
}

TEST_F(BsifLearnTest, ResponsesHaveNearZeroMedian) {
  const Eigen::MatrixXd patches = sample_patches(*images_, 3, 50'000, 42);
  for (int f = 0; f < 5; ++f) {
    std::vector<double> r(static_cast<std::size_t>(patches.cols()));
    double s = 0, ss = 0;
    for (Eigen::Index c = 0; c < patches.cols(); ++c) {
      double v = 0;
      for (int j = 0; j < 9; ++j) v += bank_->filter(f)[static_cast<std::size_t>(j)] * patches(j, c);
      r[static_cast<std::size_t>(c)] = v;
      s += v;
      ss += v * v;
    }
    const double n = static_cast<double>(r.size());
    const double sd = std::sqrt(ss / n - (s / n) * (s / n));
    std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(r.size() / 2), r.end());
    EXPECT_LT(std::abs(r[r.size() / 2]), 0.05 * sd) << "filter " << f;
  }
}

TEST(BsifLearnErrorTest, RejectsBadShapes) {
  const auto imgs = white_noise_images(1, 1);
  EXPECT_THROW(learn_bsif_filters(imgs, 4, 5, 0), DataError);
  EXPECT_THROW(learn_bsif_filters(imgs, 3, 4, 0), DataError);
  EXPECT_THROW(learn_bsif_filters(imgs, 3, 9, 0), DataError);  // only 8 mean-free dimensions
  EXPECT_THROW(learn_bsif_filters({}, 3, 5, 0), DataError);
}

TEST(BsifLearnErrorTest, InsufficientPatchSupply) {
  std::mt19937_64 rng(1);
  const std::vector<GrayImage> imgs{random_image(60, 60, rng)};
  EXPECT_THROW(learn_bsif_filters(imgs, 9, 8, 0), DataError);
}

TEST(BsifLearnErrorTest, NonConvergenceNamesIterationCount) {
  const auto imgs = white_noise_images(4, 2);
  BsifLearnOptions opt;
  opt.max_iterations = 2;
  opt.tolerance = 1e-15;
  try {
    learn_bsif_filters(imgs, 5, 8, 0, opt);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("after 2 iterations"), std::string::npos) << e.what();
  }
}

TEST(FilterBankIoTest, RoundTripAndCorruption) {
  std::mt19937_64 rng(5);
  const auto bank = random_bank(5, 6, rng);
  TempDir dir("bank");
  save_filter_bank(bank, dir / "b.bin");
  EXPECT_EQ(load_filter_bank(dir / "b.bin"), bank);

  auto bytes = encode_filter_bank(bank);
  EXPECT_EQ(bytes.size(), 4u + 2 + 2 + 2 + 6 * 25 * 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BSIF");
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_filter_bank(truncated), FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_filter_bank(bad), FormatError);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(decode_filter_bank(extra), FormatError);
}

TEST(FilterBankIoTest, ShippedBankHoldsInvariants) {
  const auto bank = load_filter_bank(std::filesystem::path(OCULAR_DATA_DIR) / "bsif_k9_n8.bin");
  EXPECT_EQ(bank.k(), 9);
  EXPECT_EQ(bank.n(), 8);
  for (int f = 0; f < bank.n(); ++f) {
    double mean = 0;
    for (double c : bank.filter(f)) mean += c;
    EXPECT_NEAR(mean / 81.0, 0.0, 1e-6);
  }
}

TEST(FilterBankLearnTest, DeadLeavesImagesConverge) {
  std::vector<GrayImage> imgs;
  for (int i = 0; i < 3; ++i) imgs.push_back(dead_leaves_image(160, 160, 100 + i));
  const auto bank = learn_bsif_filters(imgs, 7, 8, 1);
  EXPECT_EQ(bank.cardinality(), 256);
}

}  // namespace
}  // namespace ocular
