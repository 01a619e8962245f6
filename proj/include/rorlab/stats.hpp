#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rorlab {

/// Count / sum / sum-of-squares accumulator. Shards merge exactly, so the
/// merged result does not depend on how work was split.
struct RunningStats {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const RunningStats& o) {
    count += o.count;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  /// Unbiased sample variance.
  double variance() const;
  /// Standard error of the mean.
  double stderr_mean() const;
};

double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate far into the tail.
double normal_sf(double x);

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `sample` and `cdf`. The sample is copied and sorted.
double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf);

/// Asymptotic p-value of the one-sample KS test (Stephens' correction).
double ks_pvalue(double statistic, std::size_t n);

double binomial(int n, int k);

/// Worker count: the override if set, else ROR_WORKERS, else the hardware
/// concurrency.
unsigned worker_count();
/// 0 clears the override.
void set_worker_override(unsigned workers);

/// Runs fn(shard) for shard in [0, shards) on a small thread pool. Shard
/// results must be combined by the caller in shard order; the shard count,
/// not the worker count, fixes the arithmetic.
void parallel_shards(std::size_t shards, const std::function<void(std::size_t)>& fn);

}  // namespace rorlab
