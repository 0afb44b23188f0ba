#pragma once

// Replicate-parallel execution with results that do not depend on the
// number of workers: replicates are cut into fixed-size blocks, each block
// is reduced on its own, and block results are combined in block order by
// a pairwise tree.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace fbmq {

inline constexpr std::uint64_t kDefaultBlock = 1024;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Combines `items` left-to-right by a balanced binary tree.
template <typename T, typename Op>
T tree_reduce(std::span<const T> items, Op op) {
  if (items.empty()) return T{};
  if (items.size() == 1) return items.front();
  const std::size_t mid = items.size() / 2;
  return op(tree_reduce(items.first(mid), op), tree_reduce(items.subspan(mid), op));
}

inline double pairwise_sum(std::span<const double> xs) {
  return tree_reduce(xs, [](double a, double b) { return a + b; });
}

/// First and second moments of a replicate sample.
struct Tally {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return std::max(v, 0.0);
  }
  double stderr_of_mean() const { return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }

  friend Tally operator+(const Tally& a, const Tally& b) {
    return {a.n + b.n, a.sum + b.sum, a.sumsq + b.sumsq};
  }
};

/// Accumulates a Tally inside one block with compensated sums.
class TallyBuilder {
 public:
  void add(double x) {
    ++n_;
    sum_.add(x);
    sumsq_.add(x * x);
  }
  Tally finish() const { return {n_, sum_.value(), sumsq_.value()}; }

 private:
  std::uint64_t n_ = 0;
  CompensatedSum sum_;
  CompensatedSum sumsq_;
};

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `make_worker()` once per worker thread, then calls
/// `worker(begin, end)` for every block [begin,end) of [0,n). The returned
/// vector holds one result per block, in block order.
template <typename MakeWorker>
auto run_blocks(std::uint64_t n, unsigned workers, std::uint64_t block, MakeWorker make_worker) {
  using Worker = decltype(make_worker());
  using Result = decltype(std::declval<Worker&>()(std::uint64_t{}, std::uint64_t{}));
  block = std::max<std::uint64_t>(block, 1);
  const std::uint64_t n_blocks = (n + block - 1) / block;
  std::vector<Result> results(n_blocks);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto body = [&] {
    try {
      Worker w = make_worker();
      for (std::uint64_t b = next++; b < n_blocks; b = next++) {
        const std::uint64_t begin = b * block;
        results[b] = w(begin, std::min(n, begin + block));
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = n_blocks;
    }
  };

  const unsigned nw = static_cast<unsigned>(
      std::min<std::uint64_t>(resolve_workers(workers), std::max<std::uint64_t>(n_blocks, 1)));
  if (nw <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(nw);
    for (unsigned i = 0; i < nw; ++i) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace fbmq
