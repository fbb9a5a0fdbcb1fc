#pragma once

#include "ssvcqr/types.hpp"

#include <cstdint>
#include <functional>

namespace ssvcqr {

double median(Vec v);

/// Robust scale: median absolute deviation times 1.4826.
double mad_scale(const Vec& y);

/// Sample tau-quantile as the ceil(n*tau)-th order statistic, the minimizer
/// of the empirical check loss.
double sample_quantile(Vec y, double tau);

/// Runs fn(0..count-1) on up to `threads` workers. Tasks must write to
/// disjoint slots; iteration order inside a worker is unspecified but every
/// index runs exactly once, so results are deterministic.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace ssvcqr
