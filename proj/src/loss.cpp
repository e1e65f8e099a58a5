#include "skewcast/loss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "skewcast/error.hpp"
#include "skewcast/parallel.hpp"

namespace skewcast {

namespace {

constexpr double kMaxLogScore = 700.0;

[[noreturn]] void domain_fail(const LossSpec& spec, double y, double mu) {
  throw data_error("DomainError", spec.label() + " undefined at y=" + format_real(y) +
                                      ", mu=" + format_real(mu));
}

}  // namespace

LossSpec::LossSpec(LossKind kind, double param, LinkKind link) : kind_(kind), param_(param), link_(link) {
  switch (kind) {
    case LossKind::kMse:
      param_ = 0.0;
      if (link != LinkKind::kIdentity) throw config_error("BadLink", "mse uses the identity link");
      break;
    case LossKind::kPseudoHuber:
      if (!(param > 0.0) || !std::isfinite(param)) {
        throw config_error("BadLossParam", "pseudo-Huber delta must be > 0");
      }
      if (link != LinkKind::kIdentity) throw config_error("BadLink", "pseudohuber uses the identity link");
      break;
    case LossKind::kPoisson:
    case LossKind::kGamma:
      param_ = kind == LossKind::kPoisson ? 1.0 : 2.0;
      if (link != LinkKind::kLog) throw config_error("BadLink", "poisson/gamma require the log link");
      break;
    case LossKind::kTweedie:
      if (!(param > 1.0 && param < 2.0)) {
        throw config_error("BadLossParam", "tweedie power must lie in (1, 2), got " + format_real(param));
      }
      if (link != LinkKind::kLog) throw config_error("BadLink", "tweedie requires the log link");
      break;
  }
}

LossSpec LossSpec::mse() { return LossSpec(LossKind::kMse, 0.0, LinkKind::kIdentity); }
LossSpec LossSpec::pseudo_huber(double delta) {
  return LossSpec(LossKind::kPseudoHuber, delta, LinkKind::kIdentity);
}
LossSpec LossSpec::poisson() { return LossSpec(LossKind::kPoisson, 1.0, LinkKind::kLog); }
LossSpec LossSpec::gamma() { return LossSpec(LossKind::kGamma, 2.0, LinkKind::kLog); }
LossSpec LossSpec::tweedie(double power) { return LossSpec(LossKind::kTweedie, power, LinkKind::kLog); }

double LossSpec::mean_from_score(double score) const noexcept {
  return link_ == LinkKind::kLog ? std::exp(std::min(score, kMaxLogScore)) : score;
}

double LossSpec::score_from_mean(double mu) const {
  if (link_ == LinkKind::kIdentity) return mu;
  if (!(mu > 0.0)) throw data_error("DomainError", "log link needs a positive mean");
  return std::log(mu);
}

std::string LossSpec::label() const {
  switch (kind_) {
    case LossKind::kMse: return "mse";
    case LossKind::kPseudoHuber: return "pseudohuber_" + format_real(param_);
    case LossKind::kPoisson: return "poisson";
    case LossKind::kGamma: return "gamma";
    case LossKind::kTweedie: return "tweedie_" + format_real(param_);
  }
  return "?";
}

LossSpec parse_loss(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  double param = 0.0;
  const bool has_param = colon != std::string::npos;
  if (has_param) {
    const std::string rest = text.substr(colon + 1);
    char* end = nullptr;
    param = std::strtod(rest.c_str(), &end);
    if (rest.empty() || end != rest.c_str() + rest.size()) {
      throw config_error("UnknownLoss", text);
    }
  }
  if (name == "mse" && !has_param) return LossSpec::mse();
  if (name == "pseudohuber") return LossSpec::pseudo_huber(has_param ? param : 1.0);
  if (name == "poisson" && !has_param) return LossSpec::poisson();
  if (name == "gamma" && !has_param) return LossSpec::gamma();
  if (name == "tweedie" && has_param) return LossSpec::tweedie(param);
  throw config_error("UnknownLoss", text);
}

double deviance(const LossSpec& spec, double y, double mu) {
  switch (spec.kind()) {
    case LossKind::kMse: {
      const double r = y - mu;
      return r * r;
    }
    case LossKind::kPseudoHuber: {
      // delta^2 (sqrt(1 + (r/delta)^2) - 1), rewritten without cancellation.
      const double r = y - mu;
      const double u = r / spec.delta();
      return r * r / (std::sqrt(1.0 + u * u) + 1.0);
    }
    case LossKind::kPoisson: {
      if (!(mu > 0.0) || !(y >= 0.0)) domain_fail(spec, y, mu);
      const double ylog = y > 0.0 ? y * std::log(y / mu) : 0.0;
      return std::max(0.0, 2.0 * (ylog - y + mu));
    }
    case LossKind::kGamma: {
      if (!(mu > 0.0) || !(y > 0.0)) domain_fail(spec, y, mu);
      return std::max(0.0, 2.0 * (-std::log(y / mu) + (y - mu) / mu));
    }
    case LossKind::kTweedie: {
      if (!(mu > 0.0) || !(y >= 0.0)) domain_fail(spec, y, mu);
      const double p = spec.power();
      if (y == 0.0) return 2.0 * std::pow(mu, 2.0 - p) / (2.0 - p);
      // y (y^{1-p} - mu^{1-p})/(1-p) - (y^{2-p} - mu^{2-p})/(2-p), with the power
      // differences taken through expm1 so that p near 1 or 2 stays accurate.
      const double l = std::log(y / mu);
      const double t1 = y * std::pow(mu, 1.0 - p) * std::expm1((1.0 - p) * l) / (1.0 - p);
      const double t2 = std::pow(mu, 2.0 - p) * std::expm1((2.0 - p) * l) / (2.0 - p);
      return std::max(0.0, 2.0 * (t1 - t2));
    }
  }
  return 0.0;
}

GradHess grad_hess(const LossSpec& spec, double y, double score) {
  GradHess gh;
  switch (spec.kind()) {
    case LossKind::kMse:
      gh = {-2.0 * (y - score), 2.0};
      break;
    case LossKind::kPseudoHuber: {
      const double r = y - score;
      const double u = r / spec.delta();
      const double q = std::sqrt(1.0 + u * u);
      gh = {-r / q, 1.0 / (q * q * q)};
      break;
    }
    case LossKind::kPoisson: {
      if (!(y >= 0.0)) domain_fail(spec, y, spec.mean_from_score(score));
      const double mu = spec.mean_from_score(score);
      gh = {2.0 * (mu - y), 2.0 * mu};
      break;
    }
    case LossKind::kGamma: {
      if (!(y > 0.0)) domain_fail(spec, y, spec.mean_from_score(score));
      const double ratio = y * std::exp(-std::min(score, kMaxLogScore));
      gh = {2.0 * (1.0 - ratio), 2.0 * ratio};
      break;
    }
    case LossKind::kTweedie: {
      if (!(y >= 0.0)) domain_fail(spec, y, spec.mean_from_score(score));
      const double p = spec.power();
      const double s = std::min(score, kMaxLogScore);
      const double a = y * std::exp((1.0 - p) * s);  // y mu^{1-p}
      const double b = std::exp((2.0 - p) * s);      // mu^{2-p}
      gh = {2.0 * (b - a), 2.0 * ((p - 1.0) * a + (2.0 - p) * b)};
      break;
    }
  }
  gh.hess = std::max(gh.hess, kHessianFloor);
  return gh;
}

double total_loss(const LossSpec& spec, std::span<const double> weights,
                  std::span<const double> ys, std::span<const double> mus) {
  if (weights.size() != ys.size() || ys.size() != mus.size()) {
    throw data_error("LengthMismatch", "weights/ys/mus have " + std::to_string(weights.size()) + "/" +
                                           std::to_string(ys.size()) + "/" +
                                           std::to_string(mus.size()) + " entries");
  }
  return weighted_deviance_sum(spec, weights, ys, mus);
}

double weight_for(const WeightScheme& scheme, double y) {
  switch (scheme.kind) {
    case WeightKind::kUnit: return 1.0;
    case WeightKind::kLogSales: return std::log1p(y) + kWeightFloor;
    case WeightKind::kSqrtSales: return std::sqrt(y) + kWeightFloor;
    case WeightKind::kLinearSales: return y + kWeightFloor;
    case WeightKind::kPower:
      if (!(scheme.alpha > 0.0)) throw config_error("BadWeightScheme", "power weight needs alpha > 0");
      return std::pow(y, scheme.alpha) + kWeightFloor;
  }
  return 1.0;
}

std::vector<double> weights_for(const WeightScheme& scheme, std::span<const double> ys) {
  std::vector<double> w(ys.size());
  std::transform(ys.begin(), ys.end(), w.begin(), [&](double y) { return weight_for(scheme, y); });
  return w;
}

double constant_minimizer(const LossSpec& spec, std::span<const double> weights,
                          std::span<const double> ys) {
  if (weights.size() != ys.size()) throw data_error("LengthMismatch", "weights vs ys");
  if (ys.empty()) throw data_error("EmptyInput", "constant_minimizer on no data");
  const double wsum = pairwise_sum(weights);
  std::vector<double> wy(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) wy[i] = weights[i] * ys[i];
  const double mean = pairwise_sum(wy) / wsum;
  if (spec.kind() != LossKind::kPseudoHuber) return mean;

  // The weighted pseudo-Huber score is strictly monotone in mu: bisect its root
  // between the sample extremes.
  auto [lo_it, hi_it] = std::minmax_element(ys.begin(), ys.end());
  double lo = *lo_it, hi = *hi_it;
  std::vector<double> g(ys.size());
  auto score_sum = [&](double mu) {
    for (std::size_t i = 0; i < ys.size(); ++i) g[i] = weights[i] * grad_hess(spec, ys[i], mu).grad;
    return pairwise_sum(g);
  };
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (score_sum(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + 0.5 * (hi - lo);
}

ConvexityTable convexity_profile(std::span<const LossSpec> specs, double actual,
                                 std::span<const double> mu_grid) {
  ConvexityTable table;
  table.mu_grid.assign(mu_grid.begin(), mu_grid.end());
  for (const auto& spec : specs) {
    table.labels.push_back(spec.label());
    std::vector<double> col;
    col.reserve(mu_grid.size());
    for (double mu : mu_grid) col.push_back(deviance(spec, actual, mu));
    table.columns.push_back(std::move(col));
  }
  return table;
}

std::string ConvexityTable::to_csv() const {
  std::string out = "mu";
  for (const auto& l : labels) out += "," + l;
  out += '\n';
  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    out += format_real(mu_grid[i]);
    for (const auto& col : columns) out += "," + format_real(col[i]);
    out += '\n';
  }
  return out;
}

}  // namespace skewcast
