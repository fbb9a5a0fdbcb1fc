#include "ssvcqr/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

namespace ssvcqr {

double median(Vec v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw std::invalid_argument("median of empty vector");
  std::sort(v.data(), v.data() + n);
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mad_scale(const Vec& y) {
  const double m = median(y);
  Vec dev = (y.array() - m).abs().matrix();
  return 1.4826 * median(dev);
}

double sample_quantile(Vec y, double tau) {
  const Eigen::Index n = y.size();
  if (n == 0) throw std::invalid_argument("quantile of empty vector");
  std::sort(y.data(), y.data() + n);
  auto k = static_cast<Eigen::Index>(std::ceil(tau * static_cast<double>(n)));
  k = std::clamp<Eigen::Index>(k, 1, n);
  return y[k - 1];
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  threads = std::clamp(threads, 1, count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ssvcqr
