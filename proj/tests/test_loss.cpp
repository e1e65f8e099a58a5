#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "skewcast/error.hpp"
#include "skewcast/loss.hpp"
#include "support.hpp"

namespace skewcast {
namespace {

using testing::golden_section;
using testing::rel_err;
using testing::strict_rel_err;

std::vector<LossSpec> all_specs() {
  return {LossSpec::mse(),         LossSpec::pseudo_huber(1.0), LossSpec::pseudo_huber(5.0),
          LossSpec::poisson(),     LossSpec::gamma(),           LossSpec::tweedie(1.1),
          LossSpec::tweedie(1.5),  LossSpec::tweedie(1.9)};
}

TEST(LossSpec, LinkRules) {
  EXPECT_EQ(LossSpec::mse().link(), LinkKind::kIdentity);
  EXPECT_EQ(LossSpec::tweedie(1.5).link(), LinkKind::kLog);
  EXPECT_THROW(LossSpec(LossKind::kPoisson, 0, LinkKind::kIdentity), Error);
  EXPECT_THROW(LossSpec(LossKind::kMse, 0, LinkKind::kLog), Error);
  EXPECT_THROW(LossSpec::tweedie(1.0), Error);
  EXPECT_THROW(LossSpec::tweedie(2.0), Error);
  EXPECT_THROW(LossSpec::pseudo_huber(0.0), Error);
}

TEST(LossSpec, ParseAndLabel) {
  EXPECT_EQ(parse_loss("mse"), LossSpec::mse());
  EXPECT_EQ(parse_loss("pseudohuber"), LossSpec::pseudo_huber(1.0));
  EXPECT_EQ(parse_loss("pseudohuber:0.5"), LossSpec::pseudo_huber(0.5));
  EXPECT_EQ(parse_loss("tweedie:1.3"), LossSpec::tweedie(1.3));
  EXPECT_EQ(parse_loss("gamma"), LossSpec::gamma());
  EXPECT_THROW(parse_loss("tweedie"), Error);
  EXPECT_THROW(parse_loss("tweedie:abc"), Error);
  EXPECT_THROW(parse_loss("huber"), Error);
  EXPECT_EQ(LossSpec::tweedie(1.5).label(), "tweedie_1.5");
  EXPECT_EQ(LossSpec::pseudo_huber(1.0).label(), "pseudohuber_1");
}

TEST(Deviance, Examples) {
  EXPECT_EQ(deviance(LossSpec::mse(), 3, 1), 4.0);
  EXPECT_EQ(deviance(LossSpec::poisson(), 5, 5), 0.0);
  EXPECT_NEAR(deviance(LossSpec::gamma(), 2, 1), 2.0 * (-std::log(2.0) + 1.0), 1e-15);
  EXPECT_NEAR(deviance(LossSpec::gamma(), 2, 1), 0.613706, 1e-6);
  EXPECT_NEAR(deviance(LossSpec::tweedie(1.5), 0, 4), 8.0, 1e-12);
  const double r = 2.5, d = 1.0;
  EXPECT_NEAR(deviance(LossSpec::pseudo_huber(d), r, 0.0), d * d * (std::sqrt(1 + r * r / (d * d)) - 1), 1e-14);
}

TEST(Deviance, DomainErrors) {
  EXPECT_THROW(deviance(LossSpec::poisson(), 1, 0), Error);
  EXPECT_THROW(deviance(LossSpec::gamma(), 0, 1), Error);
  EXPECT_THROW(deviance(LossSpec::tweedie(1.5), -1, 1), Error);
  EXPECT_THROW(grad_hess(LossSpec::gamma(), 0, 0.0), Error);
}

// Printed formula for Tweedie deviance, evaluated directly as an oracle.
double tweedie_textbook(double p, double y, double mu) {
  return 2.0 * (y * (std::pow(y, 1 - p) - std::pow(mu, 1 - p)) / (1 - p) -
                (std::pow(y, 2 - p) - std::pow(mu, 2 - p)) / (2 - p));
}

TEST(Deviance, TweedieMatchesPrintedFormula) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> lu(std::log(0.1), std::log(1000.0));
  for (double p : {1.2, 1.5, 1.8}) {
    for (int i = 0; i < 2000; ++i) {
      const double y = std::exp(lu(gen)), mu = std::exp(lu(gen));
      EXPECT_LT(rel_err(deviance(LossSpec::tweedie(p), y, mu), tweedie_textbook(p, y, mu)), 1e-9);
    }
  }
}

TEST(Deviance, ZeroAtPerfectFitAndNonNegative) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> lu(std::log(0.1), std::log(1000.0));
  for (const auto& s : all_specs()) {
    for (int i = 0; i < 500; ++i) {
      const double y = std::exp(lu(gen)), mu = std::exp(lu(gen));
      EXPECT_GE(deviance(s, y, mu), 0.0);
      EXPECT_LE(deviance(s, y, y), 1e-12 * std::max(1.0, y)) << s.label();
    }
  }
}

TEST(Deviance, TweedieLimitsRecoverPoissonAndGamma) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> lu(std::log(0.1), std::log(1000.0));
  const auto near_poisson = LossSpec::tweedie(1.0 + 1e-6);
  const auto near_gamma = LossSpec::tweedie(2.0 - 1e-6);
  for (int i = 0; i < 10000; ++i) {
    const double y = std::exp(lu(gen)), mu = std::exp(lu(gen));
    EXPECT_LT(strict_rel_err(deviance(near_poisson, y, mu), deviance(LossSpec::poisson(), y, mu)), 1e-3);
    EXPECT_LT(strict_rel_err(deviance(near_gamma, y, mu), deviance(LossSpec::gamma(), y, mu)), 1e-3);
  }
}

TEST(Deviance, TweedieAsymmetryPenalisesUnderPrediction) {
  for (double p : {1.1, 1.3, 1.5, 1.7, 1.9}) {
    for (int d = 10; d <= 90; d += 10) {
      EXPECT_GT(deviance(LossSpec::tweedie(p), 100, 100 - d), deviance(LossSpec::tweedie(p), 100, 100 + d))
          << "p=" << p << " d=" << d;
    }
  }
}

TEST(GradHess, Examples) {
  EXPECT_EQ(grad_hess(LossSpec::mse(), 10, 10).grad, 0.0);
  const auto gh = grad_hess(LossSpec::tweedie(1.5), 7.0, std::log(7.0));
  EXPECT_NEAR(gh.grad, 0.0, 1e-12);
  EXPECT_GT(gh.hess, 0.0);
}

TEST(GradHess, HessianFloor) {
  // Gamma with y far below mu has a vanishing hessian.
  EXPECT_EQ(grad_hess(LossSpec::gamma(), 1e-300, 50.0).hess, kHessianFloor);
}

// Probes are drawn where each loss is well defined. Zero sales are included
// for the losses that admit them.
struct Probe {
  double y, score;
};

std::vector<Probe> probes_for(const LossSpec& s, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> lu(std::log(0.1), std::log(1000.0)), off(-3.0, 3.0), u(0, 1);
  std::vector<Probe> out;
  for (std::size_t i = 0; i < n; ++i) {
    double y = std::exp(lu(gen));
    if (s.kind() != LossKind::kGamma && u(gen) < 0.1) y = 0.0;
    double score;
    if (s.link() == LinkKind::kLog) {
      score = (y > 0 ? std::log(y) : 0.0) + off(gen);
    } else {
      score = y + off(gen) * (1.0 + 0.1 * y);
    }
    out.push_back({y, score});
  }
  return out;
}

double deviance_of_score(const LossSpec& s, double y, double score) {
  return deviance(s, y, s.mean_from_score(score));
}

TEST(GradHess, MatchesCentralFiniteDifferences) {
  const double h = 1e-5;
  for (const auto& s : all_specs()) {
    double worst_g = 0.0, worst_h = 0.0;
    for (const Probe& p : probes_for(s, 10000, 21)) {
      const GradHess gh = grad_hess(s, p.y, p.score);
      const double fd_g =
          (deviance_of_score(s, p.y, p.score + h) - deviance_of_score(s, p.y, p.score - h)) / (2 * h);
      const double fd_h =
          (grad_hess(s, p.y, p.score + h).grad - grad_hess(s, p.y, p.score - h).grad) / (2 * h);
      worst_g = std::max(worst_g, rel_err(gh.grad, fd_g));
      worst_h = std::max(worst_h, rel_err(gh.hess, fd_h));
    }
    EXPECT_LT(worst_g, 1e-5) << s.label();
    EXPECT_LT(worst_h, 1e-3) << s.label();
  }
}

TEST(TotalLoss, Examples) {
  const std::vector<double> one = {1.0, 1.0}, ys = {3.0, 4.0};
  EXPECT_EQ(total_loss(LossSpec::mse(), one, ys, ys), 0.0);
  EXPECT_EQ(total_loss(LossSpec::mse(), std::vector<double>{2.0}, std::vector<double>{3.0},
                       std::vector<double>{1.0}),
            8.0);
  EXPECT_THROW(total_loss(LossSpec::mse(), one, ys, std::vector<double>{1.0}), Error);
}

TEST(TotalLoss, MatchesBruteForceSum) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.1, 50.0);
  for (const auto& s : all_specs()) {
    const std::size_t n = 5000;
    std::vector<double> w(n), ys(n), mus(n);
    long double brute = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = u(gen);
      ys[i] = u(gen);
      mus[i] = u(gen);
      brute += static_cast<long double>(w[i]) * deviance(s, ys[i], mus[i]);
    }
    EXPECT_LT(strict_rel_err(total_loss(s, w, ys, mus), static_cast<double>(brute)), 1e-12) << s.label();
  }
}

TEST(Weights, Schemes) {
  const std::vector<double> ys = {5.0, 7.0};
  EXPECT_EQ(weights_for(WeightScheme::unit(), ys), (std::vector<double>{1.0, 1.0}));
  EXPECT_DOUBLE_EQ(weight_for(WeightScheme::sqrt_sales(), 100.0), 10.0 + 1e-6);
  EXPECT_DOUBLE_EQ(weight_for(WeightScheme::log_sales(), 0.0), 1e-6);
  EXPECT_DOUBLE_EQ(weight_for(WeightScheme::linear_sales(), 3.0), 3.0 + 1e-6);
  EXPECT_DOUBLE_EQ(weight_for(WeightScheme::power(1.5), 4.0), 8.0 + 1e-6);
  EXPECT_THROW(weight_for(WeightScheme::power(0.0), 4.0), Error);
}

TEST(Weights, AlwaysPositiveAndFinite) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> lu(-5, 20);
  for (const auto& ws : {WeightScheme::unit(), WeightScheme::log_sales(), WeightScheme::sqrt_sales(),
                         WeightScheme::linear_sales(), WeightScheme::power(1.5)}) {
    EXPECT_GT(weight_for(ws, 0.0), 0.0);
    for (int i = 0; i < 1000; ++i) {
      const double w = weight_for(ws, std::exp(lu(gen)));
      EXPECT_TRUE(w > 0.0 && std::isfinite(w));
    }
  }
}

TEST(ConstantMinimizer, WeightedMeanMatchesGoldenSection) {
  std::mt19937_64 gen(31);
  std::gamma_distribution<double> g(0.8, 12.0);
  std::uniform_real_distribution<double> wu(0.2, 3.0);
  const std::size_t n = 400;
  std::vector<double> ys(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = g(gen) + 0.05;
    w[i] = wu(gen);
  }
  for (const auto& s : {LossSpec::mse(), LossSpec::poisson(), LossSpec::gamma(), LossSpec::tweedie(1.5),
                        LossSpec::pseudo_huber(1.0)}) {
    auto objective = [&](double mu) {
      std::vector<double> mus(n, mu);
      return total_loss(s, w, ys, mus);
    };
    const double oracle = golden_section(objective, 0.01, 200.0);
    EXPECT_LT(strict_rel_err(constant_minimizer(s, w, ys), oracle), 1e-6) << s.label();
  }
}

TEST(Convexity, ProfileShapeAndOrdering) {
  std::vector<double> grid;
  for (int m = 10; m <= 190; m += 10) grid.push_back(m);
  const std::vector<LossSpec> specs = {LossSpec::tweedie(1.1), LossSpec::tweedie(1.5), LossSpec::tweedie(1.9),
                                       LossSpec::mse(), LossSpec::pseudo_huber(1.0)};
  const ConvexityTable t = convexity_profile(specs, 100.0, grid);
  ASSERT_EQ(t.columns.size(), 5u);
  for (const auto& col : t.columns) {
    ASSERT_EQ(col.size(), 19u);
    EXPECT_EQ(std::min_element(col.begin(), col.end()) - col.begin(), 9);  // mu = 100
  }
  auto second_diff = [&](std::size_t c) { return t.columns[c][8] - 2 * t.columns[c][9] + t.columns[c][10]; };
  EXPECT_GT(second_diff(0), second_diff(1));
  EXPECT_GT(second_diff(1), second_diff(2));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_GT(second_diff(3), second_diff(c));
  const std::string csv = t.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "mu,tweedie_1.1,tweedie_1.5,tweedie_1.9,mse,pseudohuber_1");
}

}  // namespace
}  // namespace skewcast
