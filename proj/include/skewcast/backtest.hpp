#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skewcast/biascorr.hpp"
#include "skewcast/core.hpp"
#include "skewcast/datagen.hpp"
#include "skewcast/learner.hpp"
#include "skewcast/loss.hpp"
#include "skewcast/metrics.hpp"
#include "skewcast/stats.hpp"

namespace skewcast {

struct ExperimentArm {
  std::string id;
  TargetTransform transform;
  LossSpec loss = LossSpec::mse();
  WeightScheme weight_scheme;
  CorrectorKind corrector = CorrectorKind::kNone;
  // Plumbing check: forecasts are copied from the actuals instead of fitted.
  bool oracle = false;
};

// E1, E2, E3-1.1 ... E3-1.9, E4, E5, E4-S, E4-V, E4-PB.
std::vector<ExperimentArm> standard_arms();
// Looks up a standard arm id. Throws ConfigError("UnknownArm").
ExperimentArm standard_arm(const std::string& id);

struct BacktestPlan {
  std::optional<std::filesystem::path> panel_path;
  std::optional<GenConfig> generator;  // used when no panel path is given
  int train_days = 730;
  int cadence_days = 7;
  int versions = 8;
  std::vector<int> horizons = {6, 12, 24};
  std::vector<ExperimentArm> arms = standard_arms();
  std::string baseline = "E5";
  LearnerConfig learner;
  std::uint64_t seed = 7;

  void validate() const;
  // Loads the panel file or generates the configured synthetic panel.
  SalesPanel load_panel() const;
};

struct ArmResult {
  std::string arm_id;
  std::vector<VersionMetrics> per_version;  // ordered by (version, horizon)
  std::map<int, HorizonSummary> aggregated;
  std::map<int, RelativeMetrics> relative;  // empty when the baseline is degenerate
};

struct BacktestReport {
  std::vector<Day> origins;
  std::vector<ArmResult> arms;  // plan order
  std::string baseline;

  const ArmResult& arm(const std::string& id) const;
  std::string metrics_csv() const;
  std::string report_json() const;
};

// Rolling-origin evaluation of every arm. Throws DataError("InsufficientHistory")
// when the panel cannot hold train window + versions + longest horizon.
BacktestReport run_backtest(const BacktestPlan& plan, const SalesPanel& panel);
BacktestReport run_backtest(const BacktestPlan& plan);

// Forecast origins of the plan on `panel`, oldest first.
std::vector<Day> version_origins(const BacktestPlan& plan, const SalesPanel& panel);

struct TrendRow {
  std::string label;
  double param = 0.0;  // variance power for sweeps, rank for ladders
  int horizon_weeks = 0;
  double wmape = 0.0;
  double wbias = 0.0;
};

struct TrendVerdict {
  int horizon_weeks = 0;
  int inversions = 0;  // adjacent pairs against the expected direction
  bool holds = false;  // inversions <= 1
};

struct TrendTable {
  std::string kind;  // "weight_ladder" or "power_sweep"
  std::vector<TrendRow> rows;  // ordered by (step, horizon)
  std::vector<TrendVerdict> verdicts;
  std::optional<double> theoretical_power;

  std::string to_csv() const;
  std::string to_json() const;
};

// Log target + Mse arms under each scheme; verdict expects wbias to increase.
TrendTable run_weight_ladder(const BacktestPlan& plan, const SalesPanel& panel,
                             const std::vector<WeightScheme>& schemes);
// Raw-sales Tweedie arms; verdict expects wbias to be non-increasing in p.
TrendTable run_power_sweep(const BacktestPlan& plan, const SalesPanel& panel,
                           const std::vector<double>& powers);

// Adjacent pairs of `values` that move against `increasing` (strictly, or
// non-strictly when `strict` is false).
int count_inversions(const std::vector<double>& values, bool increasing, bool strict);

struct DevianceResidualReport {
  std::vector<double> residuals;  // sign(y - mu) * sqrt(deviance)
  Moments moments;
  double jarque_bera = 0.0;
};

// Throws ConfigError for Mse/PseudoHuber models.
DevianceResidualReport deviance_residual_report(const FitModel& model, const Dataset& data);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace skewcast
