#pragma once

#include <span>
#include <string>
#include <vector>

#include "skewcast/core.hpp"

namespace skewcast {

enum class LossKind { kMse, kPseudoHuber, kPoisson, kGamma, kTweedie };
enum class LinkKind { kIdentity, kLog };

// A member of the deviance family. Mse and PseudoHuber use the identity link;
// Poisson, Gamma and Tweedie use the log link so that mu = exp(score) > 0.
class LossSpec {
 public:
  static LossSpec mse();
  static LossSpec pseudo_huber(double delta = 1.0);
  static LossSpec poisson();
  static LossSpec gamma();
  // Requires 1 < power < 2.
  static LossSpec tweedie(double power);

  // Validating constructor used by parsers. `param` is delta for PseudoHuber and
  // the variance power for Tweedie; ignored otherwise.
  LossSpec(LossKind kind, double param, LinkKind link);

  LossKind kind() const noexcept { return kind_; }
  LinkKind link() const noexcept { return link_; }
  double delta() const noexcept { return param_; }
  double power() const noexcept { return param_; }
  double param() const noexcept { return param_; }

  // True for the Poisson/Gamma/Tweedie deviances that model raw sales.
  bool models_raw_sales() const noexcept { return link_ == LinkKind::kLog; }

  // Maps the learner's internal score onto the mean.
  double mean_from_score(double score) const noexcept;
  double score_from_mean(double mu) const;

  // Column label such as "tweedie_1.5" or "pseudohuber_1".
  std::string label() const;

  friend bool operator==(const LossSpec&, const LossSpec&) = default;

 private:
  LossSpec() = default;
  LossKind kind_ = LossKind::kMse;
  double param_ = 0.0;
  LinkKind link_ = LinkKind::kIdentity;
};

// "mse", "pseudohuber", "pseudohuber:0.5", "poisson", "gamma", "tweedie:1.5".
LossSpec parse_loss(const std::string& text);

struct GradHess {
  double grad = 0.0;
  double hess = 0.0;
};

inline constexpr double kHessianFloor = 1e-16;
inline constexpr double kWeightFloor = 1e-6;

// Per-sample deviance, including the leading factor 2 for Poisson/Gamma/Tweedie.
// Throws DataError("DomainError") on invalid (y, mu).
double deviance(const LossSpec& spec, double y, double mu);

// Derivatives of deviance(y, mean_from_score(score)) with respect to score.
// hess is floored at kHessianFloor.
GradHess grad_hess(const LossSpec& spec, double y, double score);

// Sum_i w_i * deviance(y_i, mu_i) with fixed-block pairwise summation.
// Throws DataError("LengthMismatch").
double total_loss(const LossSpec& spec, std::span<const double> weights,
                  std::span<const double> ys, std::span<const double> mus);

double weight_for(const WeightScheme& scheme, double y);
std::vector<double> weights_for(const WeightScheme& scheme, std::span<const double> ys);

// Weighted minimiser of sum w * deviance(y, mu) over a constant mu. Closed form
// (weighted mean) for every kind except PseudoHuber, which is solved iteratively.
double constant_minimizer(const LossSpec& spec, std::span<const double> weights,
                          std::span<const double> ys);

struct ConvexityTable {
  std::vector<std::string> labels;
  std::vector<double> mu_grid;
  std::vector<std::vector<double>> columns;  // columns[spec][grid point]

  // `mu,<label_1>,...`
  std::string to_csv() const;
};

ConvexityTable convexity_profile(std::span<const LossSpec> specs, double actual,
                                 std::span<const double> mu_grid);

}  // namespace skewcast
