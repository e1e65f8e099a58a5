#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "skewcast/date.hpp"

namespace skewcast {

struct SalesObservation {
  std::string item_id;
  Day day;
  double sales = 0.0;
  std::vector<double> features;

  friend bool operator==(const SalesObservation&, const SalesObservation&) = default;
};

// Validated item x day panel. Observations are held in canonical order
// (item_id, then day ascending) and the panel is immutable once built.
class SalesPanel {
 public:
  SalesPanel() = default;

  // Throws DataError (NegativeSales, DuplicateKey, FeatureLength, EmptyItemId) on
  // invariant violations. Never deduplicates.
  SalesPanel(std::vector<std::string> feature_names, std::vector<SalesObservation> observations);

  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<SalesObservation>& observations() const noexcept { return observations_; }
  std::size_t size() const noexcept { return observations_.size(); }
  bool empty() const noexcept { return observations_.empty(); }
  std::size_t feature_count() const noexcept { return feature_names_.size(); }

  // Inclusive (first, last); undefined for an empty panel.
  std::pair<Day, Day> date_range() const noexcept { return {first_day_, last_day_}; }

  // Distinct item ids in canonical order.
  std::vector<std::string> item_ids() const;

  friend bool operator==(const SalesPanel&, const SalesPanel&) = default;

 private:
  std::vector<std::string> feature_names_;
  std::vector<SalesObservation> observations_;
  Day first_day_{};
  Day last_day_{};
};

enum class TransformKind { kIdentity, kLog, kSqrt };

struct TargetTransform {
  TransformKind kind = TransformKind::kIdentity;
  // Added before the logarithm; 1.0 gives log(1 + sales).
  double offset = 1.0;

  static TargetTransform identity() { return {TransformKind::kIdentity, 0.0}; }
  static TargetTransform log(double offset = 1.0) { return {TransformKind::kLog, offset}; }
  static TargetTransform sqrt() { return {TransformKind::kSqrt, 0.0}; }

  friend bool operator==(const TargetTransform&, const TargetTransform&) = default;
};

std::string to_string(const TargetTransform& t);

enum class WeightKind { kUnit, kLogSales, kSqrtSales, kLinearSales, kPower };

struct WeightScheme {
  WeightKind kind = WeightKind::kUnit;
  double alpha = 1.5;  // only read for kPower

  static WeightScheme unit() { return {WeightKind::kUnit, 1.5}; }
  static WeightScheme log_sales() { return {WeightKind::kLogSales, 1.5}; }
  static WeightScheme sqrt_sales() { return {WeightKind::kSqrtSales, 1.5}; }
  static WeightScheme linear_sales() { return {WeightKind::kLinearSales, 1.5}; }
  static WeightScheme power(double alpha) { return {WeightKind::kPower, alpha}; }

  friend bool operator==(const WeightScheme&, const WeightScheme&) = default;
};

std::string to_string(const WeightScheme& w);
WeightScheme parse_weight_scheme(const std::string& name);

// A forecast issued at `origin` covering (origin, origin + 7 * horizon_weeks].
class ForecastVersion {
 public:
  // horizon_weeks must be 6, 12 or 24.
  ForecastVersion(Day origin, int horizon_weeks);

  Day origin() const noexcept { return origin_; }
  int horizon_weeks() const noexcept { return horizon_weeks_; }
  std::string label() const;  // VDP_YYYYMMDD
  Day window_first() const noexcept { return add_days(origin_, 1); }
  Day window_last() const noexcept { return add_days(origin_, 7 * horizon_weeks_); }
  bool in_window(Day d) const noexcept { return d > origin_ && d <= window_last(); }

  friend bool operator==(const ForecastVersion&, const ForecastVersion&) = default;

 private:
  Day origin_;
  int horizon_weeks_;
};

bool is_supported_horizon(int weeks) noexcept;

// Panel CSV: `item_id,day,sales,<feature names...>`.
SalesPanel read_panel(const std::filesystem::path& path);
SalesPanel parse_panel_csv(const std::string& text);
void write_panel(const SalesPanel& panel, const std::filesystem::path& path);
std::string panel_to_csv(const SalesPanel& panel);

// Shortest text of `v` at 12 significant digits, as used in every CSV we emit.
std::string format_real(double v);

}  // namespace skewcast
