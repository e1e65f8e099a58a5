#include "skewcast/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <vector>

#include "skewcast/error.hpp"
#include "parallel_for.hpp"

namespace skewcast {

int configure_threads_from_env() {
  if (const char* env = std::getenv("SKEWCAST_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) throw config_error("BadThreads", std::string("SKEWCAST_THREADS=") + env);
    set_thread_count(static_cast<int>(n));
  }
  return thread_count();
}

void set_thread_count(int n) { omp_set_num_threads(n < 1 ? 1 : n); }

int thread_count() { return omp_get_max_threads(); }

namespace {

double pairwise_tree(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  const std::size_t half = n / 2;
  return pairwise_tree(v, half) + pairwise_tree(v + half, n - half);
}

double block_sum(const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += v[i];
  return s;
}

std::size_t block_count(std::size_t n) { return (n + kSumBlock - 1) / kSumBlock; }

double block_deviance(const LossSpec& spec, std::span<const double> w, std::span<const double> ys,
                      std::span<const double> mus, std::size_t b) {
  const std::size_t lo = b * kSumBlock;
  const std::size_t hi = std::min(ys.size(), lo + kSumBlock);
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += w[i] * deviance(spec, ys[i], mus[i]);
  return s;
}

}  // namespace

namespace serial {

double pairwise_sum(std::span<const double> values) {
  std::vector<double> partial(block_count(values.size()));
  for (std::size_t b = 0; b < partial.size(); ++b) {
    const std::size_t lo = b * kSumBlock;
    partial[b] = block_sum(values.data() + lo, std::min(kSumBlock, values.size() - lo));
  }
  return pairwise_tree(partial.data(), partial.size());
}

void grad_hess_batch(const LossSpec& spec, std::span<const double> ys,
                     std::span<const double> scores, std::span<const double> weights,
                     std::span<GradHess> out) {
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const GradHess gh = grad_hess(spec, ys[i], scores[i]);
    out[i] = {gh.grad * weights[i], gh.hess * weights[i]};
  }
}

double weighted_deviance_sum(const LossSpec& spec, std::span<const double> weights,
                             std::span<const double> ys, std::span<const double> mus) {
  std::vector<double> partial(block_count(ys.size()));
  for (std::size_t b = 0; b < partial.size(); ++b) partial[b] = block_deviance(spec, weights, ys, mus, b);
  return pairwise_tree(partial.data(), partial.size());
}

}  // namespace serial

double pairwise_sum(std::span<const double> values) {
  std::vector<double> partial(block_count(values.size()));
  parallel_for(partial.size(), [&](std::size_t b) {
    const std::size_t lo = b * kSumBlock;
    partial[b] = block_sum(values.data() + lo, std::min(kSumBlock, values.size() - lo));
  });
  return pairwise_tree(partial.data(), partial.size());
}

void grad_hess_batch(const LossSpec& spec, std::span<const double> ys,
                     std::span<const double> scores, std::span<const double> weights,
                     std::span<GradHess> out) {
  parallel_for(ys.size(), [&](std::size_t i) {
    const GradHess gh = grad_hess(spec, ys[i], scores[i]);
    out[i] = {gh.grad * weights[i], gh.hess * weights[i]};
  });
}

double weighted_deviance_sum(const LossSpec& spec, std::span<const double> weights,
                             std::span<const double> ys, std::span<const double> mus) {
  std::vector<double> partial(block_count(ys.size()));
  parallel_for(partial.size(), [&](std::size_t b) {
    partial[b] = block_deviance(spec, weights, ys, mus, b);
  });
  return pairwise_tree(partial.data(), partial.size());
}

}  // namespace skewcast
