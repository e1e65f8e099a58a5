#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "skewcast/core.hpp"

namespace skewcast {

struct SpikeDay {
  int offset = 0;           // days after start_day
  double multiplier = 1.0;  // >= 1
  friend bool operator==(const SpikeDay&, const SpikeDay&) = default;
};

// Compound Poisson-Gamma sales generator. Per item i and day d:
//   rate = popularity_i * weekly[weekday(d)] * spike(d) * price_{i,d}^elasticity
//   sales = sum of N ~ Poisson(rate) draws of Gamma(gamma_shape, gamma_scale)
// Popularity is lognormal; log price follows a per-item Gaussian random walk.
struct GenConfig {
  int n_items = 200;
  int n_days = 1000;
  std::uint64_t seed = 20240601;
  std::string start_day = "2019-01-01";
  double popularity_log_mean = 0.5;
  double popularity_log_sd = 1.0;
  double gamma_shape = 2.0;
  double gamma_scale = 1.0;
  double price_elasticity = -1.5;
  double price_volatility = 0.01;  // sd of the daily log-price step
  std::vector<SpikeDay> spike_days = default_spike_days(1000);
  std::array<double, 7> weekly_seasonality = {0.85, 0.8, 0.85, 0.95, 1.1, 1.3, 1.15};

  // Recurring yearly retail events (summer sale, late-November sale, December
  // holidays) for every year that starts inside [0, n_days).
  static std::vector<SpikeDay> default_spike_days(int n_days);

  // Throws ConfigError on invalid values.
  void validate() const;
  friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

// Emitted features, in order.
inline const std::vector<std::string> kGeneratedFeatures = {"log_price", "weekly_index",
                                                            "spike_flag", "log_popularity"};

SalesPanel generate(const GenConfig& cfg);
namespace serial {
SalesPanel generate(const GenConfig& cfg);
}

// Variance power of the generating process: (shape + 2) / (shape + 1).
double theoretical_tweedie_power(const GenConfig& cfg);

}  // namespace skewcast
