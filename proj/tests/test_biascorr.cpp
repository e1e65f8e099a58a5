#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "skewcast/biascorr.hpp"
#include "skewcast/datagen.hpp"
#include "skewcast/error.hpp"
#include "skewcast/transform.hpp"
#include "support.hpp"

namespace skewcast {
namespace {

TEST(VarianceBased, Examples) {
  EXPECT_EQ(fit_variance_based(std::vector<double>{0, 0, 0}).bc, 1.0);
  // Population variance 0.5 from the two-point sample {-sqrt(.5), +sqrt(.5)}.
  const double a = std::sqrt(0.5);
  EXPECT_NEAR(fit_variance_based(std::vector<double>{-a, a}).bc, std::exp(0.25), 1e-15);
  EXPECT_NEAR(std::exp(0.25), 1.284025, 1e-6);
  EXPECT_THROW(fit_variance_based(std::vector<double>{1.0}), Error);
}

TEST(Smearing, Examples) {
  EXPECT_EQ(fit_smearing(std::vector<double>{0, 0, 0}).bc, 1.0);
  EXPECT_NEAR(fit_smearing(std::vector<double>{std::log(2.0), -std::log(2.0)}).bc, 1.25, 1e-15);
  EXPECT_THROW(fit_smearing(std::vector<double>{}), Error);
}

TEST(Smearing, ZeroMeanResidualsGiveFactorAtLeastOne) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(20);
    double m = 0;
    for (double& x : r) m += (x = u(gen));
    m /= 20;
    for (double& x : r) x -= m;
    EXPECT_GE(fit_smearing(r).bc, 1.0 - 1e-15);
    EXPECT_GE(fit_variance_based(r).bc, 1.0);
  }
}

TEST(EstimatorAgreement, GaussianResiduals) {
  for (double sigma : {0.1, 0.3, 0.6}) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(sigma * 1000));
    std::normal_distribution<double> n(0.0, sigma);
    std::vector<double> r(10000);
    for (double& x : r) x = n(gen);
    const double v = fit_variance_based(r).bc, s = fit_smearing(r).bc;
    EXPECT_LT(std::fabs(v - s) / s, 0.02) << sigma;
  }
}

TEST(PredictionBinned, PerfectPredictionsGiveUnitMultipliers) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0, 9);
  const auto t = TargetTransform::log();
  std::vector<double> y, pred;
  for (int i = 0; i < 2000; ++i) {
    pred.push_back(u(gen));
    y.push_back(inverse(t, pred.back()));
  }
  const BiasCorrector c = fit_prediction_binned(y, pred, t);
  EXPECT_EQ(c.edges, (std::vector<double>{0, 2, 4, 6, 8}));
  ASSERT_EQ(c.multipliers.size(), 5u);
  for (double m : c.multipliers) EXPECT_NEAR(m, 1.0, 1e-9);
}

TEST(PredictionBinned, HandRatioAndFallback) {
  const auto t = TargetTransform::identity();
  // 30 points in [0,2): actual sum 30, backmapped sum 20.
  std::vector<double> y(30, 1.0), pred(30, 2.0 / 3.0);
  // 3 points in [2,4): sparse, gets the smearing fallback.
  for (int i = 0; i < 3; ++i) {
    y.push_back(3.0);
    pred.push_back(3.0);
  }
  const BiasCorrector c = fit_prediction_binned(y, pred, t);
  ASSERT_EQ(c.multipliers.size(), 2u);
  EXPECT_NEAR(c.multipliers[0], 1.5, 1e-12);
  EXPECT_EQ(c.multipliers[1], c.fallback);
  std::vector<double> resid;
  for (std::size_t i = 0; i < y.size(); ++i) resid.push_back(y[i] - pred[i]);
  EXPECT_DOUBLE_EQ(c.fallback, fit_smearing(resid).bc);
}

TEST(PredictionBinned, Errors) {
  const auto t = TargetTransform::log();
  EXPECT_THROW(fit_prediction_binned(std::vector<double>{1}, std::vector<double>{}, t), Error);
  EXPECT_THROW(fit_prediction_binned(std::vector<double>{}, std::vector<double>{}, t), Error);
  EXPECT_THROW(fit_prediction_binned(std::vector<double>{1}, std::vector<double>{1}, t, 0.0), Error);
}

TEST(Apply, KindsAndLookup) {
  EXPECT_EQ(apply(BiasCorrector{}, 42.0, 3.0), 42.0);
  BiasCorrector s;
  s.kind = CorrectorKind::kSmearing;
  s.bc = 1.25;
  EXPECT_EQ(apply(s, 100.0, 0.0), 125.0);
  BiasCorrector pb;
  pb.kind = CorrectorKind::kPredictionBinned;
  pb.edges = {0, 2, 4, 6, 8};
  pb.multipliers = {1.1, 1.2, 1.3, 1.4, 1.5};
  EXPECT_EQ(pb.bin_of(5.0), 2u);
  EXPECT_DOUBLE_EQ(apply(pb, 10.0, 5.0), 13.0);
  EXPECT_EQ(pb.bin_of(-1.0), 0u);
  EXPECT_EQ(pb.bin_of(99.0), 4u);
  EXPECT_EQ(pb.bin_of(8.0), 4u);
  EXPECT_EQ(pb.bin_of(7.999), 3u);
  // Monotone in the raw prediction within a bin.
  EXPECT_LE(apply(pb, 10.0, 5.0), apply(pb, 10.5, 5.0));
}

TEST(CorrectorKinds, NamesRoundTrip) {
  for (auto k : {CorrectorKind::kNone, CorrectorKind::kVarianceBased, CorrectorKind::kSmearing,
                 CorrectorKind::kPredictionBinned}) {
    EXPECT_EQ(parse_corrector_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_corrector_kind("magic"), Error);
}

class FittedLogModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new Dataset(Dataset::from_panel(generate(testing::small_gen(60, 400, 3))));
    LearnerConfig cfg;
    cfg.rounds = 80;
    model_ = new FitModel(fit(*data_, TargetTransform::log(), LossSpec::mse(), WeightScheme::unit(), cfg));
  }
  static void TearDownTestSuite() {
    delete data_;
    delete model_;
  }
  static Dataset* data_;
  static FitModel* model_;
};
Dataset* FittedLogModel::data_ = nullptr;
FitModel* FittedLogModel::model_ = nullptr;

TEST_F(FittedLogModel, NoneCorrectorLeavesResidualsUnchanged) {
  const auto r = corrected_residual_report(BiasCorrector{}, *model_, *data_);
  EXPECT_EQ(r.raw_mean_before, r.raw_mean_after);
  EXPECT_EQ(r.raw_var_before, r.raw_var_after);
}

TEST_F(FittedLogModel, CorrectorsShrinkTheRawBias) {
  double mean_sales = 0;
  for (double y : data_->sales) mean_sales += y;
  mean_sales /= static_cast<double>(data_->rows());
  const auto none = corrected_residual_report(BiasCorrector{}, *model_, *data_);
  ASSERT_GT(none.raw_mean_before, 0.0);
  for (auto kind : {CorrectorKind::kSmearing, CorrectorKind::kVarianceBased, CorrectorKind::kPredictionBinned}) {
    const BiasCorrector c = fit_corrector(kind, *model_, *data_);
    EXPECT_EQ(c.kind, kind);
    const auto r = corrected_residual_report(c, *model_, *data_);
    EXPECT_LT(std::fabs(r.raw_mean_after), std::fabs(r.raw_mean_before)) << to_string(kind);
  }
  const auto pb = corrected_residual_report(fit_corrector(CorrectorKind::kPredictionBinned, *model_, *data_),
                                            *model_, *data_);
  EXPECT_LE(std::fabs(pb.raw_mean_after), 0.05 * mean_sales);
}

TEST_F(FittedLogModel, CorrectorsNeedTransformedTarget) {
  LearnerConfig cfg;
  cfg.rounds = 2;
  const FitModel raw = fit(*data_, TargetTransform::identity(), LossSpec::tweedie(1.5), WeightScheme::unit(), cfg);
  EXPECT_THROW(fit_corrector(CorrectorKind::kSmearing, raw, *data_), Error);
  EXPECT_EQ(fit_corrector(CorrectorKind::kNone, raw, *data_).kind, CorrectorKind::kNone);
}

}  // namespace
}  // namespace skewcast
