#include "skewcast/metrics.hpp"

#include <cmath>

#include "skewcast/error.hpp"

namespace skewcast {

double percent_error(std::span<const double> forecast, std::span<const double> actual) {
  if (forecast.size() != actual.size()) throw data_error("LengthMismatch", "forecast vs actual days");
  double f = 0.0, a = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    f += forecast[i];
    a += actual[i];
  }
  if (!(a > 0.0)) throw data_error("ZeroActual", "no actual sales over the horizon");
  return (f - a) / a;
}

VersionMetrics version_metrics(const ItemDaily& forecasts, const ItemDaily& actuals,
                               const ForecastVersion& version) {
  for (const auto& [item, _] : forecasts) {
    if (!actuals.contains(item)) throw data_error("ItemMismatch", "forecast for unknown item " + item);
  }
  VersionMetrics m{version};
  double abs_sum = 0.0, signed_sum = 0.0, weight_sum = 0.0;
  std::vector<double> f, a;
  for (const auto& [item, days] : actuals) {
    const auto fit = forecasts.find(item);
    if (fit == forecasts.end()) throw data_error("ItemMismatch", "no forecast for item " + item);
    f.clear();
    a.clear();
    for (auto it = days.upper_bound(version.origin());
         it != days.end() && it->first <= version.window_last(); ++it) {
      const auto fd = fit->second.find(it->first);
      if (fd == fit->second.end()) {
        throw data_error("ItemMismatch", "no forecast for " + item + " on " + format_day(it->first));
      }
      f.push_back(fd->second);
      a.push_back(it->second);
    }
    double total = 0.0;
    for (double v : a) total += v;
    if (!(total > 0.0)) {
      ++m.skipped_items;
      continue;
    }
    const double pe = percent_error(f, a);
    abs_sum += total * std::fabs(pe);
    signed_sum += total * pe;
    weight_sum += total;
  }
  if (!(weight_sum > 0.0)) {
    throw data_error("NoValidItems", "every item has zero actual sales in " + version.label());
  }
  m.wmape = abs_sum / weight_sum;
  m.wbias = signed_sum / weight_sum;
  m.total_actual = weight_sum;
  return m;
}

std::map<int, HorizonSummary> aggregate_versions(std::span<const VersionMetrics> per_version) {
  if (per_version.empty()) throw data_error("EmptyInput", "no versions to aggregate");
  std::map<int, HorizonSummary> out;
  for (const auto& v : per_version) {
    HorizonSummary& s = out[v.version.horizon_weeks()];
    s.horizon_weeks = v.version.horizon_weeks();
    s.wmape += v.total_actual * v.wmape;
    s.wbias += v.total_actual * v.wbias;
    s.total_actual += v.total_actual;
    ++s.versions;
  }
  for (auto& [_, s] : out) {
    s.wmape /= s.total_actual;
    s.wbias /= s.total_actual;
  }
  return out;
}

RelativeMetrics relativize(const HorizonSummary& target, const HorizonSummary& baseline,
                           const std::string& baseline_id) {
  if (baseline.wmape == 0.0 || baseline.wbias == 0.0) {
    throw data_error("DegenerateBaseline", "baseline " + baseline_id + " has zero WMAPE or WBias");
  }
  return {target.wmape / baseline.wmape, target.wbias / std::fabs(baseline.wbias), baseline_id};
}

std::string metrics_csv_row(const std::string& config_id, const VersionMetrics& m) {
  return config_id + "," + m.version.label() + "," + std::to_string(m.version.horizon_weeks()) + "," +
         format_real(m.wmape) + "," + format_real(m.wbias) + "," + format_real(m.total_actual) + "," +
         std::to_string(m.skipped_items);
}

}  // namespace skewcast
