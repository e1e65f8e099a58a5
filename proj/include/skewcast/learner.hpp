#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skewcast/core.hpp"
#include "skewcast/loss.hpp"

namespace skewcast {

// Dense row-major design matrix plus raw sales.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<double> features;  // rows() * cols()
  std::vector<double> sales;

  std::size_t rows() const noexcept { return sales.size(); }
  std::size_t cols() const noexcept { return feature_names.size(); }
  std::span<const double> row(std::size_t r) const noexcept {
    return {features.data() + r * cols(), cols()};
  }
  double at(std::size_t r, std::size_t c) const noexcept { return features[r * cols() + c]; }

  static Dataset from_panel(const SalesPanel& panel);
  // Rows of `panel` whose index is listed in `rows`, in that order.
  static Dataset from_panel_rows(const SalesPanel& panel, std::span<const std::size_t> rows);
};

enum class BaseLearner { kTree, kLinear };

struct LearnerConfig {
  BaseLearner base = BaseLearner::kTree;
  int rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 6;
  double min_child_weight = 1.0;
  double l2_reg = 1.0;
  double subsample = 1.0;
  std::uint64_t seed = 0;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] < threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by the learning rate

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const noexcept;
  int depth() const noexcept;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct FitModel {
  LearnerConfig config;
  TargetTransform transform;
  LossSpec loss = LossSpec::mse();
  WeightScheme weight_scheme;
  double base_score = 0.0;
  std::vector<std::string> feature_names;
  std::vector<Tree> trees;                // Tree learner
  std::vector<double> linear;             // Linear learner: [intercept, beta_1..beta_k]

  // Internal score: base_score plus every member's contribution.
  double score(std::span<const double> x) const;
  friend bool operator==(const FitModel&, const FitModel&) = default;
};

// Optional per-round trace: training_loss[0] is the loss of the constant model,
// training_loss[r] the loss after round r.
struct FitDiagnostics {
  std::vector<double> training_loss;
};

// Newton boosting on (grad, hess) of `loss`. Targets are forward(transform, sales);
// weights are weights_for(ws, sales). Throws ConfigError when a raw-sales loss is
// paired with a non-identity transform and DataError("DegenerateData") when every
// target is equal.
FitModel fit(const Dataset& data, const TargetTransform& transform, const LossSpec& loss,
             const WeightScheme& ws, const LearnerConfig& cfg, FitDiagnostics* diag = nullptr);
FitModel fit(const SalesPanel& panel, const TargetTransform& transform, const LossSpec& loss,
             const WeightScheme& ws, const LearnerConfig& cfg, FitDiagnostics* diag = nullptr);

// in_raw_units = false returns the internal score. Otherwise: exp(score) for log-link
// losses, inverse(transform, score) for transformed targets, max(score, 0) for
// identity-link losses on raw sales. Throws ConfigError("ShapeMismatch").
double predict(const FitModel& model, std::span<const double> features, bool in_raw_units);

// Maps a score onto raw units (see predict) and onto target units (mu for log-link
// losses, the score otherwise).
double raw_from_score(const FitModel& model, double score);
double target_units_from_score(const FitModel& model, double score);

namespace serial {
std::vector<double> predict_scores(const FitModel& model, const Dataset& data);
}
std::vector<double> predict_scores(const FitModel& model, const Dataset& data);

struct ResidualSummary {
  std::size_t n = 0;
  double transformed_mean = 0.0;  // mean of f(y) - prediction in target units
  double transformed_var = 0.0;
  double transformed_std = 0.0;
  double raw_mean = 0.0;          // mean of y - raw prediction
  double raw_var = 0.0;
  std::vector<double> y_transformed, pred_transformed, y_raw, pred_raw;

  // `y_transformed,pred_transformed,y_raw,pred_raw`
  std::string to_csv() const;
};

ResidualSummary in_sample_fit_report(const FitModel& model, const Dataset& data);
ResidualSummary in_sample_fit_report(const FitModel& model, const SalesPanel& panel);

}  // namespace skewcast
