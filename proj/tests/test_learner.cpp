#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "skewcast/datagen.hpp"
#include "skewcast/error.hpp"
#include "skewcast/learner.hpp"
#include "skewcast/parallel.hpp"
#include "skewcast/transform.hpp"
#include "support.hpp"

namespace skewcast {
namespace {

using testing::golden_section;
using testing::small_gen;
using testing::strict_rel_err;

const Dataset& small_data() {
  static const Dataset d = Dataset::from_panel(generate(small_gen(50, 400)));
  return d;
}

LearnerConfig rounds(int n, BaseLearner base = BaseLearner::kTree) {
  LearnerConfig cfg;
  cfg.rounds = n;
  cfg.base = base;
  return cfg;
}

double weighted_mean(const std::vector<double>& w, const std::vector<double>& y) {
  long double a = 0, b = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    a += static_cast<long double>(w[i]) * y[i];
    b += w[i];
  }
  return static_cast<double>(a / b);
}

TEST(Fit, RoundZeroIsWeightedMean) {
  const Dataset& d = small_data();
  for (const auto& ws : {WeightScheme::unit(), WeightScheme::sqrt_sales()}) {
    const auto w = weights_for(ws, d.sales);
    for (const auto& loss : {LossSpec::mse(), LossSpec::poisson(), LossSpec::tweedie(1.5)}) {
      const FitModel m = fit(d, TargetTransform::identity(), loss, ws, rounds(0));
      EXPECT_TRUE(m.trees.empty());
      EXPECT_LT(strict_rel_err(predict(m, d.row(3), true), weighted_mean(w, d.sales)), 1e-12) << loss.label();
      EXPECT_DOUBLE_EQ(predict(m, d.row(3), true), predict(m, d.row(100), true));
    }
  }
}

TEST(Fit, RoundZeroTweedieMatchesGoldenSection) {
  const Dataset& d = small_data();
  const auto loss = LossSpec::tweedie(1.5);
  const std::vector<double> w(d.rows(), 1.0);
  const double oracle = golden_section(
      [&](double mu) {
        std::vector<double> mus(d.rows(), mu);
        return total_loss(loss, w, d.sales, mus);
      },
      1e-3, 100.0);
  const FitModel m = fit(d, TargetTransform::identity(), loss, WeightScheme::unit(), rounds(0));
  EXPECT_LT(strict_rel_err(predict(m, d.row(0), true), oracle), 1e-6);
}

TEST(Fit, RejectsIncompatibleTransformAndDegenerateData) {
  const Dataset& d = small_data();
  try {
    fit(d, TargetTransform::log(), LossSpec::tweedie(1.5), WeightScheme::unit(), rounds(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.error_class(), ErrorClass::kConfig);
  }
  Dataset flat = d;
  std::fill(flat.sales.begin(), flat.sales.end(), 4.0);
  try {
    fit(flat, TargetTransform::identity(), LossSpec::mse(), WeightScheme::unit(), rounds(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "DegenerateData");
  }
  Dataset empty;
  EXPECT_THROW(fit(empty, TargetTransform::identity(), LossSpec::mse(), WeightScheme::unit(), rounds(1)), Error);
  LearnerConfig bad = rounds(5);
  bad.learning_rate = 0.0;
  EXPECT_THROW(fit(d, TargetTransform::identity(), LossSpec::mse(), WeightScheme::unit(), bad), Error);
}

struct LossCase {
  TargetTransform transform;
  LossSpec loss;
  WeightScheme ws;
};

class TrainingLoss : public ::testing::TestWithParam<int> {};

TEST_P(TrainingLoss, NonIncreasingAcrossRounds) {
  const std::vector<LossCase> cases = {
      {TargetTransform::identity(), LossSpec::mse(), WeightScheme::unit()},
      {TargetTransform::log(), LossSpec::mse(), WeightScheme::sqrt_sales()},
      {TargetTransform::identity(), LossSpec::tweedie(1.3), WeightScheme::unit()},
      {TargetTransform::identity(), LossSpec::poisson(), WeightScheme::unit()},
      {TargetTransform::sqrt(), LossSpec::pseudo_huber(1.0), WeightScheme::unit()},
  };
  const auto base = GetParam() == 0 ? BaseLearner::kTree : BaseLearner::kLinear;
  for (const auto& c : cases) {
    FitDiagnostics diag;
    fit(small_data(), c.transform, c.loss, c.ws, rounds(base == BaseLearner::kTree ? 60 : 40, base), &diag);
    ASSERT_GE(diag.training_loss.size(), 2u);
    for (std::size_t r = 1; r < diag.training_loss.size(); ++r) {
      EXPECT_LE(diag.training_loss[r], diag.training_loss[r - 1] * (1 + 1e-12))
          << c.loss.label() << " round " << r;
    }
    EXPECT_LT(diag.training_loss.back(), diag.training_loss.front());
  }
}

INSTANTIATE_TEST_SUITE_P(Bases, TrainingLoss, ::testing::Values(0, 1));

TEST(Fit, TwoHundredRoundsImproveOnConstant) {
  const Dataset d = Dataset::from_panel(generate(small_gen(50, 300, 5)));
  FitDiagnostics diag;
  fit(d, TargetTransform::identity(), LossSpec::tweedie(1.5), WeightScheme::unit(), rounds(200), &diag);
  EXPECT_LT(diag.training_loss.back(), diag.training_loss.front());
}

TEST(Fit, DeterministicAcrossThreadCounts) {
  const int saved = thread_count();
  LearnerConfig cfg = rounds(25);
  cfg.subsample = 0.7;
  cfg.seed = 99;
  set_thread_count(1);
  const FitModel a = fit(small_data(), TargetTransform::log(), LossSpec::mse(), WeightScheme::unit(), cfg);
  const FitModel lin1 = fit(small_data(), TargetTransform::identity(), LossSpec::tweedie(1.5), WeightScheme::unit(),
                            rounds(10, BaseLearner::kLinear));
  set_thread_count(4);
  const FitModel b = fit(small_data(), TargetTransform::log(), LossSpec::mse(), WeightScheme::unit(), cfg);
  const FitModel lin4 = fit(small_data(), TargetTransform::identity(), LossSpec::tweedie(1.5), WeightScheme::unit(),
                            rounds(10, BaseLearner::kLinear));
  set_thread_count(saved);
  EXPECT_EQ(a, b);
  EXPECT_EQ(lin1, lin4);
  EXPECT_EQ(predict_scores(a, small_data()), serial::predict_scores(b, small_data()));
}

TEST(Fit, SubsampleSeedChangesTheModel) {
  LearnerConfig cfg = rounds(5);
  cfg.subsample = 0.5;
  cfg.seed = 1;
  const FitModel a = fit(small_data(), TargetTransform::log(), LossSpec::mse(), WeightScheme::unit(), cfg);
  cfg.seed = 2;
  const FitModel b = fit(small_data(), TargetTransform::log(), LossSpec::mse(), WeightScheme::unit(), cfg);
  EXPECT_NE(a.trees, b.trees);
}

// One informative feature, one noise feature, one exact duplicate of the
// informative feature: the split must pick the lowest-index duplicate.
TEST(Tree, ExactGreedySplitAndTieBreak) {
  Dataset d;
  d.feature_names = {"noise", "x", "x_copy"};
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    const double x = i < 100 ? 0.0 : 1.0;
    d.features.insert(d.features.end(), {u(gen), x, x});
    d.sales.push_back(x > 0.5 ? 10.0 : 2.0);
  }
  LearnerConfig cfg = rounds(1);
  cfg.max_depth = 1;
  cfg.learning_rate = 1.0;
  cfg.l2_reg = 0.0;
  const FitModel m = fit(d, TargetTransform::identity(), LossSpec::mse(), WeightScheme::unit(), cfg);
  ASSERT_EQ(m.trees.size(), 1u);
  const TreeNode& root = m.trees[0].nodes[0];
  EXPECT_EQ(root.feature, 1);
  EXPECT_DOUBLE_EQ(root.threshold, 0.5);
  // With lr 1 and no regularisation one Newton step lands on the leaf means.
  EXPECT_NEAR(predict(m, std::vector<double>{0.3, 0.0, 0.0}, true), 2.0, 1e-12);
  EXPECT_NEAR(predict(m, std::vector<double>{0.3, 1.0, 1.0}, true), 10.0, 1e-12);
  EXPECT_EQ(m.trees[0].depth(), 1);
}

TEST(Tree, RespectsMaxDepthAndMinChildWeight) {
  LearnerConfig cfg = rounds(3);
  cfg.max_depth = 2;
  const FitModel m = fit(small_data(), TargetTransform::log(), LossSpec::mse(), WeightScheme::unit(), cfg);
  for (const auto& t : m.trees) EXPECT_LE(t.depth(), 2);
  cfg.min_child_weight = 1e12;
  const FitModel stump = fit(small_data(), TargetTransform::log(), LossSpec::mse(), WeightScheme::unit(), cfg);
  for (const auto& t : stump.trees) EXPECT_EQ(t.nodes.size(), 1u);
}

TEST(Linear, RecoversLinearRelation) {
  Dataset d;
  d.feature_names = {"a", "b"};
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 2000; ++i) {
    const double a = u(gen), b = 5 * u(gen);
    d.features.insert(d.features.end(), {a, b});
    d.sales.push_back(20.0 + 3.0 * a - 1.5 * b);
  }
  LearnerConfig cfg = rounds(200, BaseLearner::kLinear);
  cfg.learning_rate = 0.5;
  cfg.l2_reg = 1e-6;
  const FitModel m = fit(d, TargetTransform::identity(), LossSpec::mse(), WeightScheme::unit(), cfg);
  ASSERT_EQ(m.linear.size(), 3u);
  EXPECT_NEAR(m.base_score + m.linear[0], 20.0, 1e-6);
  EXPECT_NEAR(m.linear[1], 3.0, 1e-6);
  EXPECT_NEAR(m.linear[2], -1.5, 1e-6);
}

TEST(Predict, RawUnitsAndShape) {
  FitModel m;
  m.feature_names = {"x"};
  m.base_score = -5.0;
  const std::vector<double> x = {1.0};
  EXPECT_EQ(predict(m, x, true), 0.0);  // negative raw-sales prediction clamped
  EXPECT_EQ(predict(m, x, false), -5.0);
  EXPECT_THROW(predict(m, std::vector<double>{1.0, 2.0}, true), Error);

  m.transform = TargetTransform::log();
  m.base_score = 2.0;
  EXPECT_EQ(predict(m, x, true), inverse(TargetTransform::log(), 2.0));

  m.transform = TargetTransform::identity();
  m.loss = LossSpec::tweedie(1.5);
  m.base_score = -800.0;
  EXPECT_GT(predict(m, x, true), -1.0);
  m.base_score = -30.0;
  EXPECT_GT(predict(m, x, true), 0.0);
}

TEST(LogLink, RawPredictionsStrictlyPositive) {
  for (const auto& loss : {LossSpec::poisson(), LossSpec::tweedie(1.9)}) {
    const FitModel m = fit(small_data(), TargetTransform::identity(), loss, WeightScheme::unit(), rounds(30));
    for (double s : predict_scores(m, small_data())) EXPECT_GT(raw_from_score(m, s), 0.0);
  }
}

TEST(Report, PerfectFitHasZeroResiduals) {
  Dataset d;
  d.feature_names = {"x"};
  for (int i = 0; i < 10; ++i) {
    d.features.push_back(i < 5 ? 0.0 : 1.0);
    d.sales.push_back(i < 5 ? 1.0 : 3.0);
  }
  FitModel m;
  m.feature_names = {"x"};
  m.trees.push_back(Tree{{{0, 0.5, 1, 2, 0.0}, {-1, 0, -1, -1, 1.0}, {-1, 0, -1, -1, 3.0}}});
  const ResidualSummary r = in_sample_fit_report(m, d);
  EXPECT_EQ(r.transformed_mean, 0.0);
  EXPECT_EQ(r.raw_mean, 0.0);
  EXPECT_EQ(r.to_csv().substr(0, 41), "y_transformed,pred_transformed,y_raw,pred");
}

TEST(Report, LogTargetResidualsShowJensenBias) {
  const Dataset& d = small_data();
  const FitModel m = fit(d, TargetTransform::log(), LossSpec::mse(), WeightScheme::unit(), rounds(100));
  const ResidualSummary r = in_sample_fit_report(m, d);
  EXPECT_LT(std::fabs(r.transformed_mean), 0.01 * r.transformed_std);
  EXPECT_GT(r.raw_mean, 0.0);

  const FitModel lin = fit(d, TargetTransform::log(), LossSpec::mse(), WeightScheme::linear_sales(), rounds(100));
  EXPECT_LT(in_sample_fit_report(lin, d).raw_mean, r.raw_mean);
}

}  // namespace
}  // namespace skewcast
