#include "skewcast/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <Eigen/Dense>

#include "parallel_for.hpp"
#include "skewcast/error.hpp"
#include "skewcast/parallel.hpp"
#include "skewcast/rng.hpp"
#include "skewcast/transform.hpp"

namespace skewcast {

Dataset Dataset::from_panel(const SalesPanel& panel) {
  std::vector<std::size_t> all(panel.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return from_panel_rows(panel, all);
}

Dataset Dataset::from_panel_rows(const SalesPanel& panel, std::span<const std::size_t> rows) {
  Dataset d;
  d.feature_names = panel.feature_names();
  d.sales.reserve(rows.size());
  d.features.reserve(rows.size() * d.cols());
  for (std::size_t r : rows) {
    const auto& o = panel.observations()[r];
    d.sales.push_back(o.sales);
    d.features.insert(d.features.end(), o.features.begin(), o.features.end());
  }
  return d;
}

void LearnerConfig::validate() const {
  if (rounds < 0) throw config_error("BadLearnerConfig", "rounds must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw config_error("BadLearnerConfig", "learning_rate must lie in (0, 1]");
  }
  if (max_depth < 1) throw config_error("BadLearnerConfig", "max_depth must be >= 1");
  if (!(min_child_weight >= 0.0)) throw config_error("BadLearnerConfig", "min_child_weight must be >= 0");
  if (!(l2_reg >= 0.0)) throw config_error("BadLearnerConfig", "l2_reg must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    throw config_error("BadLearnerConfig", "subsample must lie in (0, 1]");
  }
}

double Tree::predict(std::span<const double> x) const noexcept {
  int n = 0;
  while (!nodes[n].is_leaf()) {
    const TreeNode& node = nodes[n];
    n = x[node.feature] < node.threshold ? node.left : node.right;
  }
  return nodes[n].value;
}

int Tree::depth() const noexcept {
  auto rec = [&](auto&& self, int n) -> int {
    if (nodes[n].is_leaf()) return 0;
    return 1 + std::max(self(self, nodes[n].left), self(self, nodes[n].right));
  };
  return nodes.empty() ? 0 : rec(rec, 0);
}

double FitModel::score(std::span<const double> x) const {
  double s = base_score;
  for (const Tree& t : trees) s += t.predict(x);
  if (!linear.empty()) {
    s += linear[0];
    for (std::size_t j = 0; j < x.size(); ++j) s += linear[j + 1] * x[j];
  }
  return s;
}

namespace {

struct SplitCandidate {
  double gain = 0.0;
  double threshold = 0.0;
  bool valid = false;
};

// Features with at most this many distinct values are scanned through exact
// per-value bins in row order instead of through the presorted order.
constexpr std::size_t kMaxBins = 256;

// Per-feature presorted row order with the matching values laid out
// contiguously, plus per-row value ranks for low-cardinality features.
struct SortedColumns {
  std::vector<std::vector<std::uint32_t>> order;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::uint32_t>> bin;
  std::vector<std::vector<double>> bin_values;

  bool binned(std::size_t f) const { return !bin_values[f].empty(); }
};

SortedColumns presort(const Dataset& data) {
  SortedColumns sc;
  sc.order.resize(data.cols());
  sc.values.resize(data.cols());
  sc.bin.resize(data.cols());
  sc.bin_values.resize(data.cols());
  parallel_for(data.cols(), [&](std::size_t f) {
    auto& ord = sc.order[f];
    ord.resize(data.rows());
    std::iota(ord.begin(), ord.end(), std::uint32_t{0});
    std::stable_sort(ord.begin(), ord.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return data.at(a, f) < data.at(b, f); });
    auto& vals = sc.values[f];
    vals.resize(ord.size());
    for (std::size_t k = 0; k < ord.size(); ++k) vals[k] = data.at(ord[k], f);

    std::vector<double> distinct;
    for (double v : vals) {
      if (distinct.empty() || v > distinct.back()) distinct.push_back(v);
      if (distinct.size() > kMaxBins) return;
    }
    auto& bin = sc.bin[f];
    bin.resize(ord.size());
    std::uint32_t rank = 0;
    for (std::size_t k = 0; k < ord.size(); ++k) {
      if (vals[k] > distinct[rank]) ++rank;
      bin[ord[k]] = rank;
    }
    sc.bin_values[f] = std::move(distinct);
  });
  return sc;
}

// Children score minus the parent score, with the two child terms over one
// common denominator.
double split_gain(double gl, double hl, double g, double h, double lambda, double parent) {
  const double gr = g - gl;
  const double dl = hl + lambda;
  const double dr = h - hl + lambda;
  return (gl * gl * dr + gr * gr * dl) / (dl * dr) - parent;
}

// Running left-child sums for one open node while its candidates are visited
// in increasing feature value.
struct ScanState {
  double gl = 0.0;
  double hl = 0.0;
  double last = 0.0;
  double parent = 0.0;
  bool seen = false;
  SplitCandidate best;

  void visit(double v, double g, double h, double node_g, double node_h, const LearnerConfig& cfg) {
    if (seen && v > last) {
      if (hl >= cfg.min_child_weight && node_h - hl >= cfg.min_child_weight) {
        const double gain = split_gain(gl, hl, node_g, node_h, cfg.l2_reg, parent);
        if (gain > best.gain) {
          double thr = last + 0.5 * (v - last);
          if (!(thr > last)) thr = v;
          best = {gain, thr, true};
        }
      }
    }
    gl += g;
    hl += h;
    last = v;
    seen = true;
  }
};

// Exact greedy scan of one feature over every open node of the current level.
// `slot` maps each row to its open-node slot, or -1 when the row is not in one.
std::vector<SplitCandidate> scan_feature(const SortedColumns& sc, std::size_t f,
                                         std::span<const int> slot,
                                         std::span<const GradHess> gh,
                                         std::span<const GradHess> sorted_gh,
                                         std::span<const double> slot_g,
                                         std::span<const double> slot_h, const LearnerConfig& cfg) {
  const std::size_t slots = slot_g.size();
  std::vector<ScanState> st(slots);
  for (std::size_t s = 0; s < slots; ++s) st[s].parent = slot_g[s] * slot_g[s] / (slot_h[s] + cfg.l2_reg);
  if (sc.binned(f)) {
    const auto& bin = sc.bin[f];
    const auto& bv = sc.bin_values[f];
    const std::size_t nb = bv.size();
    // Interleaved partial tables break the store-to-load chain between
    // consecutive rows that land in the same bin. Lanes combine in a fixed order.
    constexpr std::size_t kLanes = 4;
    const std::size_t cells = slots * nb;
    std::vector<double> acc(kLanes * cells * 3, 0.0);
    for (std::size_t r = 0; r < slot.size(); ++r) {
      const int s = slot[r];
      if (s < 0) continue;
      double* c = &acc[((r % kLanes) * cells + static_cast<std::size_t>(s) * nb + bin[r]) * 3];
      c[0] += gh[r].grad;
      c[1] += gh[r].hess;
      c[2] += 1.0;
    }
    auto lane_sum = [&](std::size_t idx, std::size_t k) {
      auto at = [&](std::size_t l) { return acc[(l * cells + idx) * 3 + k]; };
      return (at(0) + at(1)) + (at(2) + at(3));
    };
    for (std::size_t s = 0; s < slots; ++s) {
      for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t idx = s * nb + b;
        if (lane_sum(idx, 2) == 0.0) continue;
        st[s].visit(bv[b], lane_sum(idx, 0), lane_sum(idx, 1), slot_g[s], slot_h[s], cfg);
      }
    }
  } else {
    const auto& ord = sc.order[f];
    const auto& vals = sc.values[f];
    for (std::size_t k = 0; k < ord.size(); ++k) {
      const int s = slot[ord[k]];
      if (s < 0) continue;
      st[s].visit(vals[k], sorted_gh[k].grad, sorted_gh[k].hess, slot_g[s], slot_h[s], cfg);
    }
  }
  std::vector<SplitCandidate> best(slots);
  for (std::size_t s = 0; s < slots; ++s) best[s] = st[s].best;
  return best;
}

void accumulate_node_stats(std::span<const GradHess> gh, std::span<const int> position,
                           std::vector<double>& node_g, std::vector<double>& node_h) {
  std::fill(node_g.begin(), node_g.end(), 0.0);
  std::fill(node_h.begin(), node_h.end(), 0.0);
  for (std::size_t r = 0; r < gh.size(); ++r) {
    const int n = position[r];
    if (n < 0) continue;
    node_g[n] += gh[r].grad;
    node_h[n] += gh[r].hess;
  }
}

Tree grow_tree(const Dataset& data, const SortedColumns& sc, std::span<const GradHess> gh,
               std::vector<int> position, const LearnerConfig& cfg) {
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<double> node_g(1), node_h(1);
  accumulate_node_stats(gh, position, node_g, node_h);

  std::vector<std::vector<GradHess>> sorted_gh(data.cols());
  parallel_for(data.cols(), [&](std::size_t f) {
    if (sc.binned(f)) return;
    const auto& ord = sc.order[f];
    sorted_gh[f].resize(ord.size());
    for (std::size_t k = 0; k < ord.size(); ++k) sorted_gh[f][k] = gh[ord[k]];
  });

  std::vector<int> frontier = {0};
  for (int depth = 0; depth < cfg.max_depth && !frontier.empty(); ++depth) {
    std::vector<int> open;
    std::vector<int> slot_of_node(tree.nodes.size(), -1);
    for (int n : frontier) {
      if (node_h[n] >= 2.0 * cfg.min_child_weight) {
        slot_of_node[n] = static_cast<int>(open.size());
        open.push_back(n);
      }
    }
    if (open.empty()) break;

    std::vector<int> slot(position.size());
    parallel_for(position.size(), [&](std::size_t r) {
      const int n = position[r];
      slot[r] = n < 0 ? -1 : slot_of_node[n];
    });
    std::vector<double> slot_g(open.size()), slot_h(open.size());
    for (std::size_t s = 0; s < open.size(); ++s) {
      slot_g[s] = node_g[open[s]];
      slot_h[s] = node_h[open[s]];
    }
    std::vector<std::vector<SplitCandidate>> per_feature(data.cols());
    parallel_for(data.cols(), [&](std::size_t f) {
      per_feature[f] = scan_feature(sc, f, slot, gh, sorted_gh[f], slot_g, slot_h, cfg);
    });

    // Fixed-order reduction: lowest feature index wins ties, and within a
    // feature the scan already kept the lowest threshold.
    std::vector<int> split_feature(open.size(), -1);
    std::vector<double> split_threshold(open.size(), 0.0);
    for (std::size_t s = 0; s < open.size(); ++s) {
      double best = 0.0;
      for (std::size_t f = 0; f < data.cols(); ++f) {
        const SplitCandidate& c = per_feature[f][s];
        if (c.valid && c.gain > best) {
          best = c.gain;
          split_feature[s] = static_cast<int>(f);
          split_threshold[s] = c.threshold;
        }
      }
    }

    std::vector<int> next;
    std::vector<int> left_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < open.size(); ++s) {
      if (split_feature[s] < 0) continue;
      const int n = open[s];
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[n].feature = split_feature[s];
      tree.nodes[n].threshold = split_threshold[s];
      tree.nodes[n].left = left;
      tree.nodes[n].right = left + 1;
      left_of[n] = left;
      next.push_back(left);
      next.push_back(left + 1);
    }
    if (next.empty()) break;

    // Route rows of split nodes to their children and refresh every node's sums.
    node_g.assign(tree.nodes.size(), 0.0);
    node_h.assign(tree.nodes.size(), 0.0);
    for (std::size_t r = 0; r < position.size(); ++r) {
      int n = position[r];
      if (n < 0) continue;
      if (left_of[n] >= 0) {
        const TreeNode& node = tree.nodes[n];
        n = data.at(r, node.feature) < node.threshold ? node.left : node.right;
        position[r] = n;
      }
      node_g[n] += gh[r].grad;
      node_h[n] += gh[r].hess;
    }
    frontier = std::move(next);
  }

  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    TreeNode& node = tree.nodes[n];
    if (node.is_leaf()) node.value = -cfg.learning_rate * node_g[n] / (node_h[n] + cfg.l2_reg);
  }
  return tree;
}

// Standardised design for the linear booster.
struct LinearDesign {
  std::vector<double> mean, scale;
};

LinearDesign standardise(const Dataset& data) {
  LinearDesign d;
  d.mean.assign(data.cols(), 0.0);
  d.scale.assign(data.cols(), 1.0);
  std::vector<double> col(data.rows());
  for (std::size_t j = 0; j < data.cols(); ++j) {
    for (std::size_t r = 0; r < data.rows(); ++r) col[r] = data.at(r, j);
    const double m = serial::pairwise_sum(col) / static_cast<double>(data.rows());
    for (std::size_t r = 0; r < data.rows(); ++r) col[r] = (col[r] - m) * (col[r] - m);
    const double sd = std::sqrt(serial::pairwise_sum(col) / static_cast<double>(data.rows()));
    d.mean[j] = m;
    d.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return d;
}

// One ridge-regularised Newton step on [intercept, standardised coefficients].
Eigen::VectorXd linear_newton_step(const Dataset& data, const LinearDesign& design,
                                   std::span<const GradHess> gh, const LearnerConfig& cfg) {
  const std::size_t k = data.cols() + 1;
  const std::size_t blocks = (data.rows() + kSumBlock - 1) / kSumBlock;
  std::vector<Eigen::MatrixXd> a_part(blocks, Eigen::MatrixXd::Zero(k, k));
  std::vector<Eigen::VectorXd> b_part(blocks, Eigen::VectorXd::Zero(k));
  parallel_for(blocks, [&](std::size_t b) {
    Eigen::VectorXd z(k);
    const std::size_t lo = b * kSumBlock;
    const std::size_t hi = std::min(data.rows(), lo + kSumBlock);
    for (std::size_t r = lo; r < hi; ++r) {
      z[0] = 1.0;
      for (std::size_t j = 0; j < data.cols(); ++j) z[j + 1] = (data.at(r, j) - design.mean[j]) / design.scale[j];
      a_part[b].selfadjointView<Eigen::Lower>().rankUpdate(z, gh[r].hess);
      b_part[b] += gh[r].grad * z;
    }
  });
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
  for (std::size_t b = 0; b < blocks; ++b) {
    a += a_part[b];
    g += b_part[b];
  }
  a = a.selfadjointView<Eigen::Lower>();
  for (std::size_t j = 1; j < k; ++j) a(j, j) += cfg.l2_reg;
  return -cfg.learning_rate * a.ldlt().solve(g);
}

}  // namespace

FitModel fit(const Dataset& data, const TargetTransform& transform, const LossSpec& loss,
             const WeightScheme& ws, const LearnerConfig& cfg, FitDiagnostics* diag) {
  cfg.validate();
  if (loss.models_raw_sales() && transform.kind != TransformKind::kIdentity) {
    throw config_error("IncompatibleTransform",
                       loss.label() + " models raw sales and needs the identity transform");
  }
  if (data.rows() == 0) throw data_error("EmptyInput", "no training rows");
  if (data.features.size() != data.rows() * data.cols()) {
    throw data_error("ShapeMismatch", "feature matrix size does not match rows x cols");
  }

  std::vector<double> target(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) target[i] = forward(transform, data.sales[i]);
  if (std::all_of(target.begin(), target.end(), [&](double t) { return t == target[0]; })) {
    throw data_error("DegenerateData", "every training target is equal");
  }
  const std::vector<double> weights = weights_for(ws, data.sales);

  FitModel model;
  model.config = cfg;
  model.transform = transform;
  model.loss = loss;
  model.weight_scheme = ws;
  model.feature_names = data.feature_names;
  model.base_score = loss.score_from_mean(constant_minimizer(loss, weights, target));

  std::vector<double> scores(data.rows(), model.base_score);
  std::vector<double> mus(data.rows());
  std::vector<GradHess> gh(data.rows());
  auto record_loss = [&] {
    if (diag == nullptr) return;
    parallel_for(data.rows(), [&](std::size_t i) { mus[i] = loss.mean_from_score(scores[i]); });
    diag->training_loss.push_back(total_loss(loss, weights, target, mus));
  };
  if (diag != nullptr) diag->training_loss.clear();
  record_loss();
  if (cfg.rounds == 0) return model;

  if (cfg.base == BaseLearner::kTree) {
    const SortedColumns sorted = presort(data);
    std::vector<int> position(data.rows(), 0);
    for (int round = 0; round < cfg.rounds; ++round) {
      grad_hess_batch(loss, target, scores, weights, gh);
      if (cfg.subsample < 1.0) {
        parallel_for(data.rows(), [&](std::size_t r) {
          const double u = keyed_uniform(hash_key(cfg.seed, static_cast<std::uint64_t>(round), r));
          position[r] = u < cfg.subsample ? 0 : -1;
        });
      } else {
        std::fill(position.begin(), position.end(), 0);
      }
      Tree tree = grow_tree(data, sorted, gh, position, cfg);
      parallel_for(data.rows(), [&](std::size_t r) { scores[r] += tree.predict(data.row(r)); });
      model.trees.push_back(std::move(tree));
      record_loss();
    }
  } else {
    const LinearDesign design = standardise(data);
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(data.cols() + 1);
    for (int round = 0; round < cfg.rounds; ++round) {
      grad_hess_batch(loss, target, scores, weights, gh);
      if (cfg.subsample < 1.0) {
        parallel_for(data.rows(), [&](std::size_t r) {
          const double u = keyed_uniform(hash_key(cfg.seed, static_cast<std::uint64_t>(round), r));
          if (!(u < cfg.subsample)) gh[r] = {0.0, 0.0};
        });
      }
      const Eigen::VectorXd step = linear_newton_step(data, design, gh, cfg);
      coef += step;
      parallel_for(data.rows(), [&](std::size_t r) {
        double d = step[0];
        for (std::size_t j = 0; j < data.cols(); ++j) {
          d += step[j + 1] * (data.at(r, j) - design.mean[j]) / design.scale[j];
        }
        scores[r] += d;
      });
      record_loss();
    }
    model.linear.assign(data.cols() + 1, 0.0);
    model.linear[0] = coef[0];
    for (std::size_t j = 0; j < data.cols(); ++j) {
      model.linear[j + 1] = coef[j + 1] / design.scale[j];
      model.linear[0] -= coef[j + 1] * design.mean[j] / design.scale[j];
    }
  }
  return model;
}

FitModel fit(const SalesPanel& panel, const TargetTransform& transform, const LossSpec& loss,
             const WeightScheme& ws, const LearnerConfig& cfg, FitDiagnostics* diag) {
  return fit(Dataset::from_panel(panel), transform, loss, ws, cfg, diag);
}

double raw_from_score(const FitModel& model, double score) {
  if (model.loss.link() == LinkKind::kLog) return model.loss.mean_from_score(score);
  if (model.transform.kind == TransformKind::kIdentity) return std::max(score, 0.0);
  return inverse(model.transform, score);
}

double target_units_from_score(const FitModel& model, double score) {
  return model.loss.mean_from_score(score);
}

double predict(const FitModel& model, std::span<const double> features, bool in_raw_units) {
  if (features.size() != model.feature_names.size()) {
    throw data_error("ShapeMismatch", "expected " + std::to_string(model.feature_names.size()) +
                                          " features, got " + std::to_string(features.size()));
  }
  const double s = model.score(features);
  return in_raw_units ? raw_from_score(model, s) : s;
}

namespace serial {
std::vector<double> predict_scores(const FitModel& model, const Dataset& data) {
  std::vector<double> out(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) out[r] = model.score(data.row(r));
  return out;
}
}  // namespace serial

std::vector<double> predict_scores(const FitModel& model, const Dataset& data) {
  if (data.cols() != model.feature_names.size()) {
    throw data_error("ShapeMismatch", "dataset has " + std::to_string(data.cols()) +
                                          " features, model expects " +
                                          std::to_string(model.feature_names.size()));
  }
  std::vector<double> out(data.rows());
  parallel_for(data.rows(), [&](std::size_t r) { out[r] = model.score(data.row(r)); });
  return out;
}

namespace {

std::pair<double, double> mean_var(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(xs.size());
  const double m = pairwise_sum(xs) / n;
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
  return {m, pairwise_sum(sq) / n};
}

}  // namespace

ResidualSummary in_sample_fit_report(const FitModel& model, const Dataset& data) {
  const std::vector<double> scores = predict_scores(model, data);
  ResidualSummary s;
  s.n = data.rows();
  s.y_transformed.resize(s.n);
  s.pred_transformed.resize(s.n);
  s.y_raw = data.sales;
  s.pred_raw.resize(s.n);
  std::vector<double> rt(s.n), rr(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    s.y_transformed[i] = forward(model.transform, data.sales[i]);
    s.pred_transformed[i] = target_units_from_score(model, scores[i]);
    s.pred_raw[i] = raw_from_score(model, scores[i]);
    rt[i] = s.y_transformed[i] - s.pred_transformed[i];
    rr[i] = s.y_raw[i] - s.pred_raw[i];
  }
  std::tie(s.transformed_mean, s.transformed_var) = mean_var(rt);
  std::tie(s.raw_mean, s.raw_var) = mean_var(rr);
  s.transformed_std = std::sqrt(s.transformed_var);
  return s;
}

ResidualSummary in_sample_fit_report(const FitModel& model, const SalesPanel& panel) {
  return in_sample_fit_report(model, Dataset::from_panel(panel));
}

std::string ResidualSummary::to_csv() const {
  std::string out = "y_transformed,pred_transformed,y_raw,pred_raw\n";
  for (std::size_t i = 0; i < n; ++i) {
    out += format_real(y_transformed[i]) + "," + format_real(pred_transformed[i]) + "," +
           format_real(y_raw[i]) + "," + format_real(pred_raw[i]) + "\n";
  }
  return out;
}

}  // namespace skewcast
