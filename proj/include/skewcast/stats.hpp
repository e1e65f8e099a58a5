#pragma once

#include <cstddef>
#include <span>

namespace skewcast {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // population
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

Moments moments(std::span<const double> xs);

// n/6 * (S^2 + K^2/4); approximately chi^2(2) for normal samples.
double jarque_bera(const Moments& m);

}  // namespace skewcast
