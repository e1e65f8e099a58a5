#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "skewcast/core.hpp"
#include "skewcast/learner.hpp"

namespace skewcast {

enum class CorrectorKind { kNone, kVarianceBased, kSmearing, kPredictionBinned };

std::string to_string(CorrectorKind kind);
CorrectorKind parse_corrector_kind(const std::string& name);

// Multiplicative correction applied to a back-transformed prediction.
struct BiasCorrector {
  CorrectorKind kind = CorrectorKind::kNone;
  double bc = 1.0;  // VarianceBased / Smearing

  // PredictionBinned. edges are ascending lower bounds in transformed units
  // starting at 0; bin k covers [edges[k], edges[k+1]) and the last bin is open
  // above. Predictions below edges[0] land in bin 0. multipliers.size() == edges.size().
  std::vector<double> edges;
  std::vector<double> multipliers;
  double fallback = 1.0;  // smearing bc used for sparse bins

  std::size_t bin_of(double pred_transformed) const noexcept;
  friend bool operator==(const BiasCorrector&, const BiasCorrector&) = default;
};

inline constexpr std::size_t kMinBinCount = 30;

// bc = exp(sigma^2 / 2), population variance. Throws DataError("InsufficientData") below 2 residuals.
BiasCorrector fit_variance_based(std::span<const double> residuals);

// bc = mean(exp(residual)). Throws DataError("InsufficientData") on an empty vector.
BiasCorrector fit_smearing(std::span<const double> residuals);

// Per-window ratio mean(actual) / mean(inverse(pred)) over windows of width
// `bin_width` in transformed units. Bins with fewer than `min_bin_count` points
// take the global smearing factor of the implied residuals.
// Throws DataError("LengthMismatch"/"EmptyInput") and ConfigError for bin_width <= 0.
BiasCorrector fit_prediction_binned(std::span<const double> y_raw,
                                    std::span<const double> pred_transformed,
                                    const TargetTransform& transform, double bin_width = 2.0,
                                    std::size_t min_bin_count = kMinBinCount);

double apply(const BiasCorrector& corrector, double raw_prediction, double pred_transformed);

// Fits the requested corrector from a model's in-sample residuals on `data`.
BiasCorrector fit_corrector(CorrectorKind kind, const FitModel& model, const Dataset& data);

struct CorrectedResidualReport {
  CorrectorKind kind = CorrectorKind::kNone;
  double raw_mean_before = 0.0;
  double raw_var_before = 0.0;
  double raw_mean_after = 0.0;
  double raw_var_after = 0.0;
};

CorrectedResidualReport corrected_residual_report(const BiasCorrector& corrector,
                                                  const FitModel& model, const Dataset& data);
CorrectedResidualReport corrected_residual_report(const BiasCorrector& corrector,
                                                  const FitModel& model, const SalesPanel& panel);

}  // namespace skewcast
