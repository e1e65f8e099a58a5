#include "skewcast/model_io.hpp"

#include <fstream>
#include <sstream>

#include "skewcast/error.hpp"

namespace skewcast {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

// Wraps nlohmann type errors so callers only see our error classes.
template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw config_error("BadJson", std::string(what) + ": " + e.what());
  }
}

std::string base_name(BaseLearner b) { return b == BaseLearner::kTree ? "tree" : "linear"; }

BaseLearner parse_base(const std::string& s) {
  if (s == "tree") return BaseLearner::kTree;
  if (s == "linear") return BaseLearner::kLinear;
  throw config_error("BadLearner", "unknown base learner '" + s + "'");
}

json tree_node_json(const Tree& t, int idx) {
  const TreeNode& n = t.nodes.at(static_cast<std::size_t>(idx));
  if (n.is_leaf()) return json{{"leaf", n.value}};
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", tree_node_json(t, n.left)},
              {"right", tree_node_json(t, n.right)}};
}

// Rebuilds nodes breadth-first with siblings adjacent, the layout the grower
// produces, so a reloaded model compares equal to the original.
Tree tree_from_json(const json& root, std::size_t n_features) {
  Tree t;
  std::vector<std::pair<const json*, int>> queue = {{&root, 0}};
  t.nodes.emplace_back();
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto [j, idx] = queue[head];
    if (t.nodes.size() > (std::size_t{1} << 20)) throw config_error("BadModel", "tree too large");
    if (j->contains("leaf")) {
      t.nodes[idx].value = j->at("leaf").get<double>();
      continue;
    }
    const int feature = j->at("feature").get<int>();
    if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) {
      throw config_error("BadModel", "split feature out of range");
    }
    const int left = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    t.nodes.emplace_back();
    t.nodes[idx].feature = feature;
    t.nodes[idx].threshold = j->at("threshold").get<double>();
    t.nodes[idx].left = left;
    t.nodes[idx].right = left + 1;
    queue.emplace_back(&j->at("left"), left);
    queue.emplace_back(&j->at("right"), left + 1);
  }
  return t;
}

}  // namespace

json to_json(const TargetTransform& t) {
  json j{{"kind", to_string(t)}};
  if (t.kind == TransformKind::kLog) j["offset"] = t.offset;
  return j;
}

TargetTransform transform_from_json(const json& j) {
  return guarded("transform", [&] {
    const std::string kind = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
    if (kind == "identity") return TargetTransform::identity();
    if (kind == "sqrt") return TargetTransform::sqrt();
    if (kind == "log") {
      const double offset = j.is_object() ? get_or(j, "offset", 1.0) : 1.0;
      if (!(offset > 0.0)) throw config_error("BadTransform", "log offset must be > 0");
      return TargetTransform::log(offset);
    }
    throw config_error("BadTransform", "unknown transform '" + kind + "'");
  });
}

json to_json(const LossSpec& loss) {
  json j;
  switch (loss.kind()) {
    case LossKind::kMse: j["kind"] = "mse"; break;
    case LossKind::kPseudoHuber: j["kind"] = "pseudohuber"; j["delta"] = loss.delta(); break;
    case LossKind::kPoisson: j["kind"] = "poisson"; break;
    case LossKind::kGamma: j["kind"] = "gamma"; break;
    case LossKind::kTweedie: j["kind"] = "tweedie"; j["power"] = loss.power(); break;
  }
  j["link"] = loss.link() == LinkKind::kLog ? "log" : "identity";
  return j;
}

LossSpec loss_from_json(const json& j) {
  return guarded("loss", [&] {
    if (j.is_string()) return parse_loss(j.get<std::string>());
    const std::string kind = j.at("kind").get<std::string>();
    LossSpec spec = LossSpec::mse();
    if (kind == "mse") {
      spec = LossSpec::mse();
    } else if (kind == "pseudohuber") {
      spec = LossSpec::pseudo_huber(get_or(j, "delta", 1.0));
    } else if (kind == "poisson") {
      spec = LossSpec::poisson();
    } else if (kind == "gamma") {
      spec = LossSpec::gamma();
    } else if (kind == "tweedie") {
      spec = LossSpec::tweedie(j.at("power").get<double>());
    } else {
      throw config_error("UnknownLoss", kind);
    }
    if (j.contains("link")) {
      const std::string link = j.at("link").get<std::string>();
      if (link != "log" && link != "identity") throw config_error("BadLink", link);
      spec = LossSpec(spec.kind(), spec.param(), link == "log" ? LinkKind::kLog : LinkKind::kIdentity);
    }
    return spec;
  });
}

json to_json(const LearnerConfig& cfg) {
  return json{{"base", base_name(cfg.base)},       {"rounds", cfg.rounds},
              {"learning_rate", cfg.learning_rate}, {"max_depth", cfg.max_depth},
              {"min_child_weight", cfg.min_child_weight}, {"l2_reg", cfg.l2_reg},
              {"subsample", cfg.subsample},        {"seed", cfg.seed}};
}

LearnerConfig learner_config_from_json(const json& j) {
  return guarded("learner", [&] {
    LearnerConfig cfg;
    cfg.base = parse_base(get_or<std::string>(j, "base", base_name(cfg.base)));
    cfg.rounds = get_or(j, "rounds", cfg.rounds);
    cfg.learning_rate = get_or(j, "learning_rate", cfg.learning_rate);
    cfg.max_depth = get_or(j, "max_depth", cfg.max_depth);
    cfg.min_child_weight = get_or(j, "min_child_weight", cfg.min_child_weight);
    cfg.l2_reg = get_or(j, "l2_reg", cfg.l2_reg);
    cfg.subsample = get_or(j, "subsample", cfg.subsample);
    cfg.seed = get_or(j, "seed", cfg.seed);
    cfg.validate();
    return cfg;
  });
}

json to_json(const BiasCorrector& c) {
  json j{{"kind", to_string(c.kind)}};
  switch (c.kind) {
    case CorrectorKind::kNone: break;
    case CorrectorKind::kVarianceBased:
    case CorrectorKind::kSmearing: j["bc"] = c.bc; break;
    case CorrectorKind::kPredictionBinned:
      j["edges"] = c.edges;
      j["multipliers"] = c.multipliers;
      j["fallback"] = c.fallback;
      break;
  }
  return j;
}

BiasCorrector corrector_from_json(const json& j) {
  return guarded("bias_corrector", [&] {
    BiasCorrector c;
    c.kind = parse_corrector_kind(j.at("kind").get<std::string>());
    c.bc = get_or(j, "bc", 1.0);
    if (c.kind == CorrectorKind::kPredictionBinned) {
      c.edges = j.at("edges").get<std::vector<double>>();
      c.multipliers = j.at("multipliers").get<std::vector<double>>();
      c.fallback = get_or(j, "fallback", 1.0);
      if (c.edges.empty() || c.edges.size() != c.multipliers.size()) {
        throw config_error("BadModel", "prediction-binned corrector needs one multiplier per edge");
      }
    }
    return c;
  });
}

json to_json(const GenConfig& cfg) {
  json spikes = json::array();
  for (const auto& s : cfg.spike_days) spikes.push_back({{"offset", s.offset}, {"multiplier", s.multiplier}});
  return json{{"n_items", cfg.n_items},
              {"n_days", cfg.n_days},
              {"seed", cfg.seed},
              {"start_day", cfg.start_day},
              {"popularity_log_mean", cfg.popularity_log_mean},
              {"popularity_log_sd", cfg.popularity_log_sd},
              {"gamma_shape", cfg.gamma_shape},
              {"gamma_scale", cfg.gamma_scale},
              {"price_elasticity", cfg.price_elasticity},
              {"price_volatility", cfg.price_volatility},
              {"spike_days", spikes},
              {"weekly_seasonality", cfg.weekly_seasonality}};
}

GenConfig gen_config_from_json(const json& j) {
  return guarded("generator", [&] {
    GenConfig cfg;
    cfg.n_items = get_or(j, "n_items", cfg.n_items);
    cfg.n_days = get_or(j, "n_days", cfg.n_days);
    cfg.seed = get_or(j, "seed", cfg.seed);
    cfg.start_day = get_or(j, "start_day", cfg.start_day);
    cfg.popularity_log_mean = get_or(j, "popularity_log_mean", cfg.popularity_log_mean);
    cfg.popularity_log_sd = get_or(j, "popularity_log_sd", cfg.popularity_log_sd);
    if (j.contains("base_rate_lognormal")) {
      const auto ms = j.at("base_rate_lognormal").get<std::vector<double>>();
      if (ms.size() != 2) throw config_error("BadGenConfig", "base_rate_lognormal is [mu, sigma]");
      cfg.popularity_log_mean = ms[0];
      cfg.popularity_log_sd = ms[1];
    }
    cfg.gamma_shape = get_or(j, "gamma_shape", cfg.gamma_shape);
    cfg.gamma_scale = get_or(j, "gamma_scale", cfg.gamma_scale);
    cfg.price_elasticity = get_or(j, "price_elasticity", cfg.price_elasticity);
    cfg.price_volatility = get_or(j, "price_volatility", cfg.price_volatility);
    if (j.contains("spike_days")) {
      cfg.spike_days.clear();
      for (const auto& s : j.at("spike_days")) {
        cfg.spike_days.push_back({s.at("offset").get<int>(), s.at("multiplier").get<double>()});
      }
    } else {
      cfg.spike_days = GenConfig::default_spike_days(cfg.n_days);
    }
    if (j.contains("weekly_seasonality")) {
      const auto w = j.at("weekly_seasonality").get<std::vector<double>>();
      if (w.size() != 7) throw config_error("BadGenerator", "weekly_seasonality needs 7 values");
      std::copy(w.begin(), w.end(), cfg.weekly_seasonality.begin());
    }
    cfg.validate();
    return cfg;
  });
}

json to_json(const ExperimentArm& arm) {
  json j{{"id", arm.id},
         {"transform", to_json(arm.transform)},
         {"loss", to_json(arm.loss)},
         {"weights", to_string(arm.weight_scheme)},
         {"corrector", to_string(arm.corrector)}};
  if (arm.oracle) j["oracle"] = true;
  return j;
}

ExperimentArm arm_from_json(const json& j) {
  return guarded("arm", [&] {
    if (j.is_string()) return standard_arm(j.get<std::string>());
    ExperimentArm arm;
    arm.id = j.at("id").get<std::string>();
    if (arm.id.empty()) throw config_error("BadPlan", "arm id is empty");
    arm.oracle = get_or(j, "oracle", false);
    if (j.contains("transform")) arm.transform = transform_from_json(j.at("transform"));
    if (j.contains("loss")) arm.loss = loss_from_json(j.at("loss"));
    if (j.contains("weights")) arm.weight_scheme = parse_weight_scheme(j.at("weights").get<std::string>());
    if (j.contains("corrector")) arm.corrector = parse_corrector_kind(j.at("corrector").get<std::string>());
    return arm;
  });
}

BacktestPlan plan_from_json(const json& j) {
  return guarded("plan", [&] {
    if (!j.is_object()) throw config_error("BadPlan", "plan must be a JSON object");
    BacktestPlan plan;
    if (j.contains("panel")) plan.panel_path = j.at("panel").get<std::string>();
    if (j.contains("generator")) plan.generator = gen_config_from_json(j.at("generator"));
    plan.train_days = get_or(j, "train_days", plan.train_days);
    plan.cadence_days = get_or(j, "cadence_days", plan.cadence_days);
    plan.versions = get_or(j, "versions", plan.versions);
    if (j.contains("horizons")) plan.horizons = j.at("horizons").get<std::vector<int>>();
    if (j.contains("arms")) {
      plan.arms.clear();
      for (const auto& a : j.at("arms")) plan.arms.push_back(arm_from_json(a));
    }
    plan.baseline = get_or(j, "baseline", plan.baseline);
    if (j.contains("learner")) plan.learner = learner_config_from_json(j.at("learner"));
    plan.seed = get_or(j, "seed", plan.seed);
    plan.validate();
    return plan;
  });
}

json model_to_json(const FitModel& model, const BiasCorrector& corrector) {
  json j{{"format", kModelFormatVersion},
         {"transform", to_json(model.transform)},
         {"loss", to_json(model.loss)},
         {"weights", to_string(model.weight_scheme)},
         {"learner", to_json(model.config)},
         {"feature_names", model.feature_names},
         {"base_score", model.base_score}};
  if (model.config.base == BaseLearner::kTree) {
    json trees = json::array();
    for (const auto& t : model.trees) trees.push_back(t.nodes.empty() ? json{{"leaf", 0.0}} : tree_node_json(t, 0));
    j["trees"] = std::move(trees);
  } else {
    j["linear"] = {{"intercept", model.linear.empty() ? 0.0 : model.linear[0]},
                   {"coefficients", model.linear.size() > 1
                                        ? std::vector<double>(model.linear.begin() + 1, model.linear.end())
                                        : std::vector<double>{}}};
  }
  j["bias_corrector"] = to_json(corrector);
  return j;
}

StoredModel model_from_json(const json& j) {
  return guarded("model", [&] {
    if (get_or<std::string>(j, "format", "") != kModelFormatVersion) {
      throw config_error("BadModel", "not a skewcast-model-v1 document");
    }
    StoredModel s;
    FitModel& m = s.model;
    m.transform = transform_from_json(j.at("transform"));
    m.loss = loss_from_json(j.at("loss"));
    m.weight_scheme = parse_weight_scheme(j.at("weights").get<std::string>());
    m.config = learner_config_from_json(j.at("learner"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.base_score = j.at("base_score").get<double>();
    if (m.config.base == BaseLearner::kTree) {
      for (const auto& tj : j.at("trees")) {
        m.trees.push_back(tree_from_json(tj, m.feature_names.size()));
      }
    } else {
      const auto& lj = j.at("linear");
      const auto coef = lj.at("coefficients").get<std::vector<double>>();
      if (coef.size() != m.feature_names.size()) {
        throw config_error("BadModel", "linear coefficient count does not match features");
      }
      m.linear.push_back(lj.at("intercept").get<double>());
      m.linear.insert(m.linear.end(), coef.begin(), coef.end());
    }
    if (j.contains("bias_corrector")) s.corrector = corrector_from_json(j.at("bias_corrector"));
    return s;
  });
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw config_error("BadJson", path.string() + ": " + e.what());
  }
}

}  // namespace skewcast
