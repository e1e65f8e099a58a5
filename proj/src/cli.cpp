#include "skewcast/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "skewcast/backtest.hpp"
#include "skewcast/error.hpp"
#include "skewcast/model_io.hpp"
#include "skewcast/parallel.hpp"

namespace skewcast {

namespace {

namespace fs = std::filesystem;

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw config_error("BadGrid", "cannot parse '" + spec + "' as start:stop:step");
    }
  }
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
    throw config_error("BadGrid", "expected start:stop:step with step > 0, got '" + spec + "'");
  }
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long k = 0; k <= n; ++k) grid.push_back(parts[0] + static_cast<double>(k) * parts[2]);
  return grid;
}

ExperimentArm parse_arm_arg(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') {
    try {
      return arm_from_json(nlohmann::json::parse(arg));
    } catch (const nlohmann::json::parse_error& e) {
      throw config_error("BadJson", e.what());
    }
  }
  if (fs::path(arg).extension() == ".json") return arm_from_json(read_json_file(arg));
  return standard_arm(arg);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"skewcast: transformation bias and Tweedie regression on sales panels"};
  app.require_subcommand(1);

  std::string config_path, out_path, panel_path, arm_arg, model_out, learner_path, plan_path, out_dir;
  std::string grid = "10:190:10";
  double actual = 100.0;
  std::vector<std::string> schemes = {"unit", "log_sales", "sqrt_sales", "linear_sales"};
  std::vector<double> powers = {1.1, 1.3, 1.5, 1.7, 1.9};

  auto* gen = app.add_subcommand("gen", "Generate a synthetic compound Poisson-Gamma panel");
  gen->add_option("--config", config_path, "Generator JSON (GenConfig field names)");
  gen->add_option("--out", out_path, "Panel CSV to write")->required();

  auto* fitc = app.add_subcommand("fit", "Fit one arm on a panel and save the model");
  fitc->add_option("--panel", panel_path, "Panel CSV")->required();
  fitc->add_option("--arm", arm_arg, "Standard arm id, inline JSON, or a .json file")->required();
  fitc->add_option("--learner", learner_path, "Learner config JSON");
  fitc->add_option("--model-out", model_out, "Model JSON to write")->required();

  auto* bt = app.add_subcommand("backtest", "Run the rolling-origin experiment grid");
  auto* ladder = app.add_subcommand("ladder", "Weight-escalation ladder on log-target models");
  auto* sweep = app.add_subcommand("sweep", "Tweedie variance-power sweep");
  for (auto* sub : {bt, ladder, sweep}) {
    sub->add_option("--plan", plan_path, "Plan JSON")->required();
    sub->add_option("--out-dir", out_dir, "Output directory")->required();
  }
  ladder->add_option("--schemes", schemes, "Weight schemes, least to most aggressive")->delimiter(',');
  sweep->add_option("--powers", powers, "Variance powers in (1, 2)")->delimiter(',');

  auto* conv = app.add_subcommand("convexity", "Deviance curves around a fixed actual");
  conv->add_option("--actual", actual, "Actual sales value");
  conv->add_option("--grid", grid, "Prediction grid start:stop:step");
  conv->add_option("--out", out_path, "CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    configure_threads_from_env();

    if (*gen) {
      const GenConfig cfg = config_path.empty() ? GenConfig{} : gen_config_from_json(read_json_file(config_path));
      cfg.validate();
      const SalesPanel panel = generate(cfg);
      write_panel(panel, out_path);
      std::cout << "wrote " << panel.size() << " rows (" << cfg.n_items << " items x " << cfg.n_days
                << " days) to " << out_path << "\n";
    } else if (*fitc) {
      const ExperimentArm arm = parse_arm_arg(arm_arg);
      if (arm.oracle) throw config_error("BadArm", "oracle arms cannot be fitted");
      const LearnerConfig cfg =
          learner_path.empty() ? LearnerConfig{} : learner_config_from_json(read_json_file(learner_path));
      const SalesPanel panel = read_panel(panel_path);
      const Dataset data = Dataset::from_panel(panel);
      const FitModel model = fit(data, arm.transform, arm.loss, arm.weight_scheme, cfg);
      const BiasCorrector corrector = fit_corrector(arm.corrector, model, data);
      write_text_file(model_out, model_to_json(model, corrector).dump(2) + "\n");
      std::cout << "arm " << arm.id << ": " << model.trees.size() << " trees, base score "
                << format_real(model.base_score) << ", corrector " << to_string(corrector.kind) << "\n";
    } else if (*bt || *ladder || *sweep) {
      const BacktestPlan plan = plan_from_json(read_json_file(plan_path));
      const SalesPanel panel = plan.load_panel();
      const fs::path dir(out_dir);
      ensure_dir(dir);
      if (*bt) {
        const BacktestReport report = run_backtest(plan, panel);
        write_text_file(dir / "metrics.csv", report.metrics_csv());
        write_text_file(dir / "report.json", report.report_json());
        std::cout << report.arms.size() << " arms x " << report.origins.size() << " versions written to "
                  << dir.string() << "\n";
      } else if (*ladder) {
        std::vector<WeightScheme> ws;
        for (const auto& s : schemes) ws.push_back(parse_weight_scheme(s));
        const TrendTable t = run_weight_ladder(plan, panel, ws);
        write_text_file(dir / "ladder.csv", t.to_csv());
        write_text_file(dir / "ladder.json", t.to_json());
        for (const auto& v : t.verdicts) {
          std::cout << v.horizon_weeks << "w: " << v.inversions << " inversion(s), "
                    << (v.holds ? "trend holds" : "trend broken") << "\n";
        }
      } else {
        const TrendTable t = run_power_sweep(plan, panel, powers);
        write_text_file(dir / "sweep.csv", t.to_csv());
        write_text_file(dir / "sweep.json", t.to_json());
        for (const auto& v : t.verdicts) {
          std::cout << v.horizon_weeks << "w: " << v.inversions << " inversion(s), "
                    << (v.holds ? "trend holds" : "trend broken") << "\n";
        }
      }
    } else if (*conv) {
      const std::vector<LossSpec> specs = {LossSpec::tweedie(1.1), LossSpec::tweedie(1.5), LossSpec::tweedie(1.9),
                                           LossSpec::mse(), LossSpec::pseudo_huber(1.0)};
      const std::vector<double> mu = parse_grid(grid);
      write_text_file(out_path, convexity_profile(specs, actual, mu).to_csv());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.error_class() == ErrorClass::kData ? 3 : 2;
  }
  return 0;
}

}  // namespace skewcast
