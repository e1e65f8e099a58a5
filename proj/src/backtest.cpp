#include "skewcast/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "parallel_for.hpp"
#include "skewcast/error.hpp"
#include "skewcast/transform.hpp"

namespace skewcast {

std::vector<ExperimentArm> standard_arms() {
  std::vector<ExperimentArm> arms;
  const auto unit = WeightScheme::unit();
  const auto raw = TargetTransform::identity();
  arms.push_back({"E1", raw, LossSpec::mse(), unit, CorrectorKind::kNone, false});
  arms.push_back({"E2", raw, LossSpec::pseudo_huber(1.0), unit, CorrectorKind::kNone, false});
  for (double p : {1.1, 1.3, 1.5, 1.7, 1.9}) {
    arms.push_back({"E3-" + format_real(p), raw, LossSpec::tweedie(p), unit, CorrectorKind::kNone, false});
  }
  arms.push_back({"E4", TargetTransform::log(), LossSpec::mse(), unit, CorrectorKind::kNone, false});
  arms.push_back({"E5", TargetTransform::log(), LossSpec::mse(), WeightScheme::sqrt_sales(),
                  CorrectorKind::kNone, false});
  arms.push_back({"E4-S", TargetTransform::log(), LossSpec::mse(), unit, CorrectorKind::kSmearing, false});
  arms.push_back({"E4-V", TargetTransform::log(), LossSpec::mse(), unit, CorrectorKind::kVarianceBased, false});
  arms.push_back({"E4-PB", TargetTransform::log(), LossSpec::mse(), unit, CorrectorKind::kPredictionBinned, false});
  return arms;
}

ExperimentArm standard_arm(const std::string& id) {
  for (auto& arm : standard_arms()) {
    if (arm.id == id) return arm;
  }
  throw config_error("UnknownArm", id);
}

void BacktestPlan::validate() const {
  if (train_days < 1) throw config_error("BadPlan", "train_days must be >= 1");
  if (cadence_days < 1) throw config_error("BadPlan", "cadence_days must be >= 1");
  if (versions < 1) throw config_error("BadPlan", "versions must be >= 1");
  if (horizons.empty()) throw config_error("BadPlan", "no horizons");
  std::set<int> seen_h;
  for (int h : horizons) {
    if (!is_supported_horizon(h)) throw config_error("BadHorizon", std::to_string(h));
    if (!seen_h.insert(h).second) throw config_error("BadPlan", "duplicate horizon");
  }
  if (arms.empty()) throw config_error("BadPlan", "no arms");
  std::set<std::string> ids;
  for (const auto& a : arms) {
    if (!ids.insert(a.id).second) throw config_error("BadPlan", "duplicate arm id " + a.id);
    if (!a.oracle && a.loss.models_raw_sales() && a.transform.kind != TransformKind::kIdentity) {
      throw config_error("IncompatibleTransform", "arm " + a.id);
    }
  }
  if (!ids.contains(baseline)) throw config_error("BadPlan", "baseline " + baseline + " is not an arm");
  learner.validate();
  if (!panel_path && !generator) throw config_error("BadPlan", "plan needs a panel path or a generator");
}

SalesPanel BacktestPlan::load_panel() const {
  if (panel_path) return read_panel(*panel_path);
  if (generator) return generate(*generator);
  throw config_error("BadPlan", "plan needs a panel path or a generator");
}

std::vector<Day> version_origins(const BacktestPlan& plan, const SalesPanel& panel) {
  if (panel.empty()) throw data_error("InsufficientHistory", "empty panel");
  const auto [first, last] = panel.date_range();
  const int max_h = *std::max_element(plan.horizons.begin(), plan.horizons.end());
  const Day last_origin = add_days(last, -7 * max_h);
  std::vector<Day> origins;
  for (int k = 0; k < plan.versions; ++k) {
    origins.push_back(add_days(last_origin, -(plan.versions - 1 - k) * plan.cadence_days));
  }
  if (add_days(origins.front(), -plan.train_days) < first) {
    throw data_error("InsufficientHistory",
                     "panel spans " + std::to_string(days_between(first, last) + 1) + " days; need " +
                         std::to_string(plan.train_days + 1 + (plan.versions - 1) * plan.cadence_days +
                                        7 * max_h) + " for this plan");
  }
  return origins;
}

const ArmResult& BacktestReport::arm(const std::string& id) const {
  for (const auto& a : arms) {
    if (a.arm_id == id) return a;
  }
  throw config_error("UnknownArm", id);
}

namespace {

struct FitKey {
  TargetTransform transform;
  LossSpec loss;
  WeightScheme weights;
  friend bool operator==(const FitKey&, const FitKey&) = default;
};

struct VersionData {
  Day origin;
  Dataset train;
  Dataset horizon;
  std::vector<std::string> horizon_items;
  std::vector<Day> horizon_days;
  ItemDaily actuals;
};

VersionData slice_version(const SalesPanel& panel, Day origin, int train_days, int max_h) {
  VersionData v{origin, {}, {}, {}, {}, {}};
  const Day train_first = add_days(origin, -train_days);
  const Day horizon_last = add_days(origin, 7 * max_h);
  std::vector<std::size_t> train_rows, horizon_rows;
  const auto& obs = panel.observations();
  for (std::size_t r = 0; r < obs.size(); ++r) {
    const Day d = obs[r].day;
    if (d >= train_first && d < origin) {
      train_rows.push_back(r);
    } else if (d > origin && d <= horizon_last) {
      horizon_rows.push_back(r);
      v.horizon_items.push_back(obs[r].item_id);
      v.horizon_days.push_back(d);
      v.actuals[obs[r].item_id][d] = obs[r].sales;
    }
  }
  for (std::size_t r : train_rows) {
    if (!(obs[r].day < origin)) throw std::logic_error("training row leaks past the forecast origin");
  }
  v.train = Dataset::from_panel_rows(panel, train_rows);
  v.horizon = Dataset::from_panel_rows(panel, horizon_rows);
  return v;
}

std::vector<VersionMetrics> score_horizons(const VersionData& v, const std::vector<double>& forecast,
                                           const std::vector<int>& horizons) {
  ItemDaily forecasts;
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    forecasts[v.horizon_items[i]][v.horizon_days[i]] = forecast[i];
  }
  std::vector<VersionMetrics> out;
  for (int h : horizons) out.push_back(version_metrics(forecasts, v.actuals, ForecastVersion(v.origin, h)));
  return out;
}

}  // namespace

BacktestReport run_backtest(const BacktestPlan& plan, const SalesPanel& panel) {
  plan.validate();
  BacktestReport report;
  report.baseline = plan.baseline;
  report.origins = version_origins(plan, panel);
  const int max_h = *std::max_element(plan.horizons.begin(), plan.horizons.end());

  std::vector<VersionData> versions(report.origins.size());
  parallel_for(versions.size(), [&](std::size_t k) {
    versions[k] = slice_version(panel, report.origins[k], plan.train_days, max_h);
  });

  // Arms sharing (transform, loss, weights) share one fitted model per version.
  std::vector<FitKey> keys;
  std::vector<int> key_of_arm(plan.arms.size(), -1);
  for (std::size_t a = 0; a < plan.arms.size(); ++a) {
    const auto& arm = plan.arms[a];
    if (arm.oracle) continue;
    const FitKey key{arm.transform, arm.loss, arm.weight_scheme};
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      it = keys.end() - 1;
    }
    key_of_arm[a] = static_cast<int>(it - keys.begin());
  }

  // results[arm][version] -> metrics per horizon
  std::vector<std::vector<std::vector<VersionMetrics>>> results(
      plan.arms.size(), std::vector<std::vector<VersionMetrics>>(versions.size()));

  LearnerConfig cfg = plan.learner;
  cfg.seed = plan.seed;
  const std::size_t n_jobs = (keys.size() + 1) * versions.size();
  parallel_for(
      n_jobs,
      [&](std::size_t job) {
        const std::size_t k = job % versions.size();
        const std::size_t key = job / versions.size();
        const VersionData& v = versions[k];
        if (key == keys.size()) {
          std::vector<double> forecast(v.horizon.sales);
          for (std::size_t a = 0; a < plan.arms.size(); ++a) {
            if (plan.arms[a].oracle) results[a][k] = score_horizons(v, forecast, plan.horizons);
          }
          return;
        }
        const FitKey& fk = keys[key];
        const FitModel model = fit(v.train, fk.transform, fk.loss, fk.weights, cfg);
        const std::vector<double> scores = predict_scores(model, v.horizon);
        for (std::size_t a = 0; a < plan.arms.size(); ++a) {
          if (key_of_arm[a] != static_cast<int>(key)) continue;
          const BiasCorrector corrector = fit_corrector(plan.arms[a].corrector, model, v.train);
          std::vector<double> forecast(scores.size());
          for (std::size_t i = 0; i < scores.size(); ++i) {
            forecast[i] = apply(corrector, raw_from_score(model, scores[i]), scores[i]);
          }
          results[a][k] = score_horizons(v, forecast, plan.horizons);
        }
      },
      /*dynamic=*/true);

  for (std::size_t a = 0; a < plan.arms.size(); ++a) {
    ArmResult r;
    r.arm_id = plan.arms[a].id;
    for (auto& per_h : results[a]) {
      for (auto& m : per_h) r.per_version.push_back(std::move(m));
    }
    r.aggregated = aggregate_versions(r.per_version);
    report.arms.push_back(std::move(r));
  }
  const ArmResult& base = report.arm(plan.baseline);
  const auto base_agg = base.aggregated;
  for (auto& r : report.arms) {
    try {
      for (const auto& [h, s] : r.aggregated) r.relative[h] = relativize(s, base_agg.at(h), plan.baseline);
    } catch (const Error& e) {
      if (e.code() != "DegenerateBaseline") throw;
      r.relative.clear();
    }
  }
  return report;
}

BacktestReport run_backtest(const BacktestPlan& plan) {
  plan.validate();
  return run_backtest(plan, plan.load_panel());
}

std::string BacktestReport::metrics_csv() const {
  std::vector<const ArmResult*> order;
  for (const auto& a : arms) order.push_back(&a);
  std::stable_sort(order.begin(), order.end(),
                   [](const ArmResult* x, const ArmResult* y) { return x->arm_id < y->arm_id; });
  std::string out = std::string(kMetricsCsvHeader) + "\n";
  for (const ArmResult* a : order) {
    for (const auto& m : a->per_version) out += metrics_csv_row(a->arm_id, m) + "\n";
  }
  return out;
}

std::string BacktestReport::report_json() const {
  nlohmann::ordered_json j;
  j["baseline"] = baseline;
  j["origins"] = nlohmann::ordered_json::array();
  for (Day d : origins) j["origins"].push_back(format_day(d));
  j["arms"] = nlohmann::ordered_json::array();
  for (const auto& a : arms) {
    nlohmann::ordered_json arm;
    arm["id"] = a.arm_id;
    arm["aggregated"] = nlohmann::ordered_json::array();
    for (const auto& [h, s] : a.aggregated) {
      arm["aggregated"].push_back({{"horizon_weeks", h},
                                   {"wmape", s.wmape},
                                   {"wbias", s.wbias},
                                   {"total_actual", s.total_actual},
                                   {"versions", s.versions}});
    }
    if (a.relative.empty()) {
      arm["relative"] = nullptr;
    } else {
      arm["relative"] = nlohmann::ordered_json::array();
      for (const auto& [h, r] : a.relative) {
        arm["relative"].push_back({{"horizon_weeks", h}, {"wmape_rel", r.wmape_rel}, {"wbias_rel", r.wbias_rel}});
      }
    }
    j["arms"].push_back(std::move(arm));
  }
  return j.dump(2) + "\n";
}

int count_inversions(const std::vector<double>& values, bool increasing, bool strict) {
  int n = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double a = values[k - 1], b = values[k];
    const bool ok = increasing ? (strict ? b > a : b >= a) : (strict ? b < a : b <= a);
    if (!ok) ++n;
  }
  return n;
}

namespace {

TrendTable trend_from_report(const BacktestReport& report, const std::vector<std::string>& labels,
                             const std::vector<double>& params, const std::vector<int>& horizons,
                             bool increasing, bool strict) {
  TrendTable t;
  for (std::size_t k = 0; k < report.arms.size(); ++k) {
    for (const auto& [h, s] : report.arms[k].aggregated) {
      t.rows.push_back({labels[k], params[k], h, s.wmape, s.wbias});
    }
  }
  for (int h : horizons) {
    std::vector<double> wbias;
    for (const auto& a : report.arms) wbias.push_back(a.aggregated.at(h).wbias);
    const int inv = count_inversions(wbias, increasing, strict);
    t.verdicts.push_back({h, inv, inv <= 1});
  }
  std::sort(t.verdicts.begin(), t.verdicts.end(),
            [](const TrendVerdict& a, const TrendVerdict& b) { return a.horizon_weeks < b.horizon_weeks; });
  return t;
}

}  // namespace

TrendTable run_weight_ladder(const BacktestPlan& plan, const SalesPanel& panel,
                             const std::vector<WeightScheme>& schemes) {
  if (schemes.empty()) throw config_error("BadPlan", "weight ladder needs at least one scheme");
  BacktestPlan p = plan;
  p.arms.clear();
  std::vector<std::string> labels;
  std::vector<double> params;
  for (std::size_t k = 0; k < schemes.size(); ++k) {
    labels.push_back(to_string(schemes[k]));
    params.push_back(static_cast<double>(k));
    p.arms.push_back({"W-" + labels.back(), TargetTransform::log(), LossSpec::mse(), schemes[k],
                      CorrectorKind::kNone, false});
  }
  p.baseline = p.arms.front().id;
  TrendTable t = trend_from_report(run_backtest(p, panel), labels, params, p.horizons, true, true);
  t.kind = "weight_ladder";
  return t;
}

TrendTable run_power_sweep(const BacktestPlan& plan, const SalesPanel& panel,
                           const std::vector<double>& powers) {
  if (powers.empty()) throw config_error("BadPlan", "power sweep needs at least one power");
  BacktestPlan p = plan;
  p.arms.clear();
  std::vector<std::string> labels;
  for (double pw : powers) {
    labels.push_back("tweedie_" + format_real(pw));
    p.arms.push_back({"TW-" + format_real(pw), TargetTransform::identity(), LossSpec::tweedie(pw),
                      WeightScheme::unit(), CorrectorKind::kNone, false});
  }
  p.baseline = p.arms.front().id;
  TrendTable t = trend_from_report(run_backtest(p, panel), labels, powers, p.horizons, false, false);
  t.kind = "power_sweep";
  if (plan.generator) t.theoretical_power = theoretical_tweedie_power(*plan.generator);
  return t;
}

std::string TrendTable::to_csv() const {
  std::string out = "step,param,horizon_weeks,wmape,wbias\n";
  for (const auto& r : rows) {
    out += r.label + "," + format_real(r.param) + "," + std::to_string(r.horizon_weeks) + "," +
           format_real(r.wmape) + "," + format_real(r.wbias) + "\n";
  }
  return out;
}

std::string TrendTable::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["expected"] = kind == "weight_ladder" ? "wbias strictly increasing" : "wbias non-increasing in p";
  if (theoretical_power) {
    j["theoretical_tweedie_power"] = *theoretical_power;
  } else {
    j["theoretical_tweedie_power"] = nullptr;
  }
  j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) {
    j["verdicts"].push_back({{"horizon_weeks", v.horizon_weeks}, {"inversions", v.inversions}, {"holds", v.holds}});
  }
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"step", r.label}, {"param", r.param}, {"horizon_weeks", r.horizon_weeks},
                         {"wmape", r.wmape}, {"wbias", r.wbias}});
  }
  return j.dump(2) + "\n";
}

DevianceResidualReport deviance_residual_report(const FitModel& model, const Dataset& data) {
  if (!model.loss.models_raw_sales()) {
    throw config_error("NotADevianceModel",
                       model.loss.label() + " model: inspect plain residuals via in_sample_fit_report");
  }
  const std::vector<double> scores = predict_scores(model, data);
  DevianceResidualReport r;
  r.residuals.resize(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double y = data.sales[i];
    const double mu = model.loss.mean_from_score(scores[i]);
    const double d = std::sqrt(deviance(model.loss, y, mu));
    r.residuals[i] = y > mu ? d : (y < mu ? -d : 0.0);
  }
  r.moments = moments(r.residuals);
  r.jarque_bera = jarque_bera(r.moments);
  return r;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw io_error("write failed for " + path.string());
}

}  // namespace skewcast
