#pragma once

#include <cstddef>
#include <span>

#include "skewcast/loss.hpp"

// Data-parallel kernels. Every OpenMP kernel has a serial reference with the
// same name under `serial::`; the two are required to agree bit for bit at any
// thread count, which the tests check and the benchmark target measures.
namespace skewcast {

// Applies SKEWCAST_THREADS (if set) to the OpenMP runtime. Returns the cap in effect.
int configure_threads_from_env();
void set_thread_count(int n);
int thread_count();

// Fixed block length of the pairwise reduction; independent of thread count.
inline constexpr std::size_t kSumBlock = 1024;

namespace serial {

double pairwise_sum(std::span<const double> values);
void grad_hess_batch(const LossSpec& spec, std::span<const double> ys,
                     std::span<const double> scores, std::span<const double> weights,
                     std::span<GradHess> out);
double weighted_deviance_sum(const LossSpec& spec, std::span<const double> weights,
                             std::span<const double> ys, std::span<const double> mus);

}  // namespace serial

double pairwise_sum(std::span<const double> values);
void grad_hess_batch(const LossSpec& spec, std::span<const double> ys,
                     std::span<const double> scores, std::span<const double> weights,
                     std::span<GradHess> out);
double weighted_deviance_sum(const LossSpec& spec, std::span<const double> weights,
                             std::span<const double> ys, std::span<const double> mus);

}  // namespace skewcast
