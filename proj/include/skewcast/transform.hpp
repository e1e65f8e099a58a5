#pragma once

#include <span>

#include "skewcast/core.hpp"

namespace skewcast {

// Identity -> y, Log -> log(y + offset), Sqrt -> sqrt(y).
// Throws DataError("DomainError") for y < 0 or y + offset <= 0 under Log.
double forward(const TargetTransform& t, double y);

// Total inverse. Sqrt clamps negative scores to 0 before squaring, and every
// result is clamped at 0 so an inverted prediction is never negative.
double inverse(const TargetTransform& t, double z);

struct JensenGapReport {
  double mean_of_transformed_backmapped = 0.0;  // f^-1(mean(f(y)))
  double mean_raw = 0.0;                        // mean(y)
  double gap = 0.0;                             // mean_raw - backmapped
  double relative_gap = 0.0;                    // gap / mean_raw (0 when mean_raw is 0)
};

// Measures how far inverting the mean in transformed units falls short of the raw mean.
// Throws DataError("EmptyInput") on an empty sample.
JensenGapReport jensen_gap(const TargetTransform& t, std::span<const double> ys);

}  // namespace skewcast
