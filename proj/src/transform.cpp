#include "skewcast/transform.hpp"

#include <algorithm>
#include <cmath>

#include "skewcast/error.hpp"

namespace skewcast {

double forward(const TargetTransform& t, double y) {
  if (!(y >= 0.0)) throw data_error("DomainError", "negative sales " + format_real(y));
  switch (t.kind) {
    case TransformKind::kIdentity:
      return y;
    case TransformKind::kSqrt:
      return std::sqrt(y);
    case TransformKind::kLog:
      if (!(y + t.offset > 0.0)) {
        throw data_error("DomainError", "log of non-positive value (sales " + format_real(y) +
                                            ", offset " + format_real(t.offset) + ")");
      }
      // log1p keeps the round trip exact to rounding for small sales.
      if (t.offset == 1.0) return std::log1p(y);
      return std::log(y + t.offset);
  }
  return y;
}

double inverse(const TargetTransform& t, double z) {
  switch (t.kind) {
    case TransformKind::kIdentity:
      return std::max(z, 0.0);
    case TransformKind::kSqrt: {
      const double c = std::max(z, 0.0);
      return c * c;
    }
    case TransformKind::kLog:
      if (t.offset == 1.0) return std::max(std::expm1(z), 0.0);
      return std::max(std::exp(z) - t.offset, 0.0);
  }
  return z;
}

JensenGapReport jensen_gap(const TargetTransform& t, std::span<const double> ys) {
  if (ys.empty()) throw data_error("EmptyInput", "jensen_gap needs at least one value");
  // Neumaier-compensated means in extended precision: the gap for nearly equal
  // samples is tiny and must keep its sign.
  long double sum_f = 0.0L, comp_f = 0.0L, sum_y = 0.0L, comp_y = 0.0L;
  auto add = [](long double& sum, long double& comp, long double v) {
    const long double s = sum + v;
    if (std::fabs(sum) >= std::fabs(v)) {
      comp += (sum - s) + v;
    } else {
      comp += (v - s) + sum;
    }
    sum = s;
  };
  const bool all_equal = std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys[0]; });
  for (double y : ys) {
    add(sum_f, comp_f, forward(t, y));
    add(sum_y, comp_y, y);
  }
  const long double n = static_cast<long double>(ys.size());
  JensenGapReport r;
  r.mean_raw = static_cast<double>((sum_y + comp_y) / n);
  if (all_equal) {
    r.mean_raw = ys[0];
    r.mean_of_transformed_backmapped = ys[0];
  } else {
    const long double mean_f = (sum_f + comp_f) / n;
    long double back = 0.0L;
    switch (t.kind) {
      case TransformKind::kIdentity: back = mean_f; break;
      case TransformKind::kSqrt: back = mean_f * mean_f; break;
      case TransformKind::kLog:
        back = t.offset == 1.0 ? std::expm1(mean_f) : std::exp(mean_f) - t.offset;
        break;
    }
    r.mean_of_transformed_backmapped = static_cast<double>(back);
    r.gap = static_cast<double>((sum_y + comp_y) / n - back);
  }
  r.relative_gap = r.mean_raw > 0.0 ? r.gap / r.mean_raw : 0.0;
  return r;
}

}  // namespace skewcast
