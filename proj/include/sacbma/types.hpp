#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace sacbma {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log(sum(exp(v))) without overflow. Returns -inf for an all -inf input.
template <typename Derived> typename Derived::Scalar log_sum_exp(Eigen::DenseBase<Derived> const &v)
{
  using Scalar = typename Derived::Scalar;
  Scalar const peak = v.maxCoeff();
  if (!std::isfinite(peak)) { return peak; }
  return peak + std::log((v.derived().array() - peak).exp().sum());
}

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// handled exactly once; callers write results into pre-sized slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
inline void parallel_for(Index count, unsigned threads, std::function<void(Index)> const &body)
{
  if (threads == 0) { threads = std::max(1u, std::thread::hardware_concurrency()); }
  threads = static_cast<unsigned>(std::min<Index>(threads, std::max<Index>(count, 1)));
  if (threads <= 1) {
    for (Index i = 0; i < count; ++i) { body(i); }
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (Index i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) { failure = std::current_exception(); }
        next = count;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) { pool.emplace_back(worker); }
  pool.clear();
  if (failure) { std::rethrow_exception(failure); }
}

} // namespace sacbma
