#pragma once

#include <cstddef>
#include <exception>
#include <limits>

namespace skewcast {

// OpenMP loop over [0, n) that carries exceptions out of the parallel region.
// When several iterations throw, the one with the lowest index is rethrown so
// the error does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, bool dynamic = false) {
  std::exception_ptr first;
  std::size_t first_index = std::numeric_limits<std::size_t>::max();
  const long long count = static_cast<long long>(n);
  auto body = [&](long long i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(skewcast_parallel_for)
      {
        if (static_cast<std::size_t>(i) < first_index) {
          first_index = static_cast<std::size_t>(i);
          first = std::current_exception();
        }
      }
    }
  };
  if (dynamic) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) body(i);
  } else {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) body(i);
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace skewcast
