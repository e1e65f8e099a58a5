#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "skewcast/backtest.hpp"
#include "skewcast/biascorr.hpp"
#include "skewcast/datagen.hpp"
#include "skewcast/learner.hpp"

namespace skewcast {

inline constexpr const char* kModelFormatVersion = "skewcast-model-v1";

nlohmann::json to_json(const TargetTransform& t);
TargetTransform transform_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LossSpec& loss);
LossSpec loss_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LearnerConfig& cfg);
LearnerConfig learner_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BiasCorrector& c);
BiasCorrector corrector_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentArm& arm);
// Accepts a standard arm id string or an arm object.
ExperimentArm arm_from_json(const nlohmann::json& j);
BacktestPlan plan_from_json(const nlohmann::json& j);

struct StoredModel {
  FitModel model;
  BiasCorrector corrector;
};

// Single JSON document tagged "skewcast-model-v1". Trees are nested nodes.
nlohmann::json model_to_json(const FitModel& model, const BiasCorrector& corrector = {});
StoredModel model_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace skewcast
