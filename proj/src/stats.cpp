#include "skewcast/stats.hpp"

#include <cmath>
#include <vector>

#include "skewcast/parallel.hpp"

namespace skewcast {

Moments moments(std::span<const double> xs) {
  Moments m;
  m.n = xs.size();
  if (xs.empty()) return m;
  const double n = static_cast<double>(xs.size());
  m.mean = pairwise_sum(xs) / n;
  std::vector<double> p2(xs.size()), p3(xs.size()), p4(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - m.mean;
    p2[i] = d * d;
    p3[i] = p2[i] * d;
    p4[i] = p2[i] * p2[i];
  }
  m.variance = pairwise_sum(p2) / n;
  if (m.variance > 0.0) {
    m.skewness = (pairwise_sum(p3) / n) / std::pow(m.variance, 1.5);
    m.excess_kurtosis = (pairwise_sum(p4) / n) / (m.variance * m.variance) - 3.0;
  }
  return m;
}

double jarque_bera(const Moments& m) {
  return static_cast<double>(m.n) / 6.0 *
         (m.skewness * m.skewness + 0.25 * m.excess_kurtosis * m.excess_kurtosis);
}

}  // namespace skewcast
