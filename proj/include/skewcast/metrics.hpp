#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "skewcast/core.hpp"

namespace skewcast {

using DailyValues = std::map<Day, double>;
using ItemDaily = std::map<std::string, DailyValues>;

// (sum F - sum A) / sum A. Throws DataError("ZeroActual") when sum A <= 0 and
// DataError("LengthMismatch") on unequal lengths.
double percent_error(std::span<const double> forecast, std::span<const double> actual);

struct VersionMetrics {
  ForecastVersion version;
  double wmape = 0.0;
  double wbias = 0.0;
  double total_actual = 0.0;
  std::size_t skipped_items = 0;
};

// Actual-weighted |PE| and PE across items over the version's window. Items with
// zero actual over the window are skipped and counted. Every actual day in the
// window needs a forecast. Throws DataError("NoValidItems") / ("ItemMismatch").
VersionMetrics version_metrics(const ItemDaily& forecasts, const ItemDaily& actuals,
                               const ForecastVersion& version);

struct HorizonSummary {
  int horizon_weeks = 0;
  double wmape = 0.0;
  double wbias = 0.0;
  double total_actual = 0.0;
  std::size_t versions = 0;
};

// Sales-weighted average across versions, one entry per horizon.
// Throws DataError("EmptyInput").
std::map<int, HorizonSummary> aggregate_versions(std::span<const VersionMetrics> per_version);

struct RelativeMetrics {
  double wmape_rel = 0.0;
  double wbias_rel = 0.0;
  std::string baseline_id;
};

// wmape / baseline.wmape and wbias / |baseline.wbias|.
// Throws DataError("DegenerateBaseline") if either baseline value is 0.
RelativeMetrics relativize(const HorizonSummary& target, const HorizonSummary& baseline,
                           const std::string& baseline_id);

// `config_id,version,horizon_weeks,wmape,wbias,total_actual,skipped_items`
inline constexpr const char* kMetricsCsvHeader =
    "config_id,version,horizon_weeks,wmape,wbias,total_actual,skipped_items";
std::string metrics_csv_row(const std::string& config_id, const VersionMetrics& m);

}  // namespace skewcast
