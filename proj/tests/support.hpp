#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "skewcast/core.hpp"
#include "skewcast/datagen.hpp"

namespace skewcast::testing {

// Relative error with an absolute floor of 1 so that values near zero are
// compared on an absolute scale.
inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1.0});
}

inline double strict_rel_err(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

// Golden-section minimisation of a unimodal function on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi,
                             int iterations = 300) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iterations && b - a > 1e-14 * std::max(1.0, std::fabs(a)); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline GenConfig small_gen(int items, int days, std::uint64_t seed = 11) {
  GenConfig cfg;
  cfg.n_items = items;
  cfg.n_days = days;
  cfg.seed = seed;
  cfg.spike_days = GenConfig::default_spike_days(days);
  return cfg;
}

inline SalesObservation obs(std::string item, const char* day, double sales,
                            std::vector<double> features = {}) {
  return {std::move(item), parse_day(day), sales, std::move(features)};
}

}  // namespace skewcast::testing
