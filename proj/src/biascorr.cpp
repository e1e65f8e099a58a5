#include "skewcast/biascorr.hpp"

#include <algorithm>
#include <cmath>

#include "skewcast/error.hpp"
#include "skewcast/parallel.hpp"
#include "skewcast/transform.hpp"

namespace skewcast {

std::string to_string(CorrectorKind kind) {
  switch (kind) {
    case CorrectorKind::kNone: return "none";
    case CorrectorKind::kVarianceBased: return "variance";
    case CorrectorKind::kSmearing: return "smearing";
    case CorrectorKind::kPredictionBinned: return "prediction_binned";
  }
  return "?";
}

CorrectorKind parse_corrector_kind(const std::string& name) {
  if (name == "none") return CorrectorKind::kNone;
  if (name == "variance") return CorrectorKind::kVarianceBased;
  if (name == "smearing") return CorrectorKind::kSmearing;
  if (name == "prediction_binned") return CorrectorKind::kPredictionBinned;
  throw config_error("UnknownCorrector", name);
}

std::size_t BiasCorrector::bin_of(double pred_transformed) const noexcept {
  if (edges.empty()) return 0;
  // Last edge <= pred; anything below edges[0] falls in the first bin.
  const auto it = std::upper_bound(edges.begin(), edges.end(), pred_transformed);
  return it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
}

BiasCorrector fit_variance_based(std::span<const double> residuals) {
  if (residuals.size() < 2) throw data_error("InsufficientData", "variance-based correction needs >= 2 residuals");
  const double n = static_cast<double>(residuals.size());
  const double mean = pairwise_sum(residuals) / n;
  std::vector<double> sq(residuals.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (residuals[i] - mean) * (residuals[i] - mean);
  const double var = pairwise_sum(sq) / n;
  BiasCorrector c;
  c.kind = CorrectorKind::kVarianceBased;
  c.bc = std::exp(0.5 * var);
  return c;
}

BiasCorrector fit_smearing(std::span<const double> residuals) {
  if (residuals.empty()) throw data_error("InsufficientData", "smearing needs at least one residual");
  std::vector<double> e(residuals.size());
  std::transform(residuals.begin(), residuals.end(), e.begin(), [](double r) { return std::exp(r); });
  BiasCorrector c;
  c.kind = CorrectorKind::kSmearing;
  c.bc = pairwise_sum(e) / static_cast<double>(e.size());
  return c;
}

BiasCorrector fit_prediction_binned(std::span<const double> y_raw,
                                    std::span<const double> pred_transformed,
                                    const TargetTransform& transform, double bin_width,
                                    std::size_t min_bin_count) {
  if (y_raw.size() != pred_transformed.size()) {
    throw data_error("LengthMismatch", "actuals and predictions differ in length");
  }
  if (y_raw.empty()) throw data_error("EmptyInput", "prediction-binned correction on no data");
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw config_error("BadBinWidth", "bin width must be > 0");
  }

  BiasCorrector c;
  c.kind = CorrectorKind::kPredictionBinned;
  const double top = *std::max_element(pred_transformed.begin(), pred_transformed.end());
  const std::size_t last = top > 0.0 ? static_cast<std::size_t>(std::floor(top / bin_width)) : 0;
  for (std::size_t k = 0; k <= last; ++k) c.edges.push_back(static_cast<double>(k) * bin_width);

  std::vector<double> residuals(y_raw.size());
  for (std::size_t i = 0; i < y_raw.size(); ++i) {
    residuals[i] = forward(transform, y_raw[i]) - pred_transformed[i];
  }
  const double smear = fit_smearing(residuals).bc;
  c.fallback = std::isfinite(smear) && smear > 0.0 ? smear : 1.0;

  std::vector<std::vector<double>> actual(c.edges.size()), backmapped(c.edges.size());
  for (std::size_t i = 0; i < y_raw.size(); ++i) {
    const std::size_t b = c.bin_of(pred_transformed[i]);
    actual[b].push_back(y_raw[i]);
    backmapped[b].push_back(inverse(transform, pred_transformed[i]));
  }
  c.multipliers.assign(c.edges.size(), c.fallback);
  for (std::size_t b = 0; b < c.edges.size(); ++b) {
    if (actual[b].size() < min_bin_count) continue;
    // Equal counts, so the ratio of means is the ratio of sums.
    const double num = pairwise_sum(actual[b]);
    const double den = pairwise_sum(backmapped[b]);
    if (num > 0.0 && den > 0.0) c.multipliers[b] = num / den;
  }
  return c;
}

double apply(const BiasCorrector& corrector, double raw_prediction, double pred_transformed) {
  switch (corrector.kind) {
    case CorrectorKind::kNone: return raw_prediction;
    case CorrectorKind::kVarianceBased:
    case CorrectorKind::kSmearing: return corrector.bc * raw_prediction;
    case CorrectorKind::kPredictionBinned:
      if (corrector.multipliers.empty()) return raw_prediction;
      return corrector.multipliers[corrector.bin_of(pred_transformed)] * raw_prediction;
  }
  return raw_prediction;
}

BiasCorrector fit_corrector(CorrectorKind kind, const FitModel& model, const Dataset& data) {
  if (kind == CorrectorKind::kNone) return {};
  if (model.transform.kind == TransformKind::kIdentity || model.loss.link() != LinkKind::kIdentity) {
    throw config_error("CorrectorNeedsTransform",
                       "bias correctors apply to models of a transformed target");
  }
  const std::vector<double> scores = predict_scores(model, data);
  if (kind == CorrectorKind::kPredictionBinned) {
    return fit_prediction_binned(data.sales, scores, model.transform);
  }
  std::vector<double> residuals(data.rows());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    residuals[i] = forward(model.transform, data.sales[i]) - scores[i];
  }
  return kind == CorrectorKind::kSmearing ? fit_smearing(residuals) : fit_variance_based(residuals);
}

CorrectedResidualReport corrected_residual_report(const BiasCorrector& corrector,
                                                  const FitModel& model, const Dataset& data) {
  const std::vector<double> scores = predict_scores(model, data);
  std::vector<double> before(data.rows()), after(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double raw = raw_from_score(model, scores[i]);
    before[i] = data.sales[i] - raw;
    after[i] = data.sales[i] - apply(corrector, raw, scores[i]);
  }
  auto mean_var = [](const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double m = pairwise_sum(xs) / n;
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
    return std::pair{m, pairwise_sum(sq) / n};
  };
  CorrectedResidualReport r;
  r.kind = corrector.kind;
  std::tie(r.raw_mean_before, r.raw_var_before) = mean_var(before);
  std::tie(r.raw_mean_after, r.raw_var_after) = mean_var(after);
  return r;
}

CorrectedResidualReport corrected_residual_report(const BiasCorrector& corrector,
                                                  const FitModel& model, const SalesPanel& panel) {
  return corrected_residual_report(corrector, model, Dataset::from_panel(panel));
}

}  // namespace skewcast
