#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gqmc/phase_space.hpp"

namespace gqmc {

/// Relative weights exp(l_i - max l). Entries equal to -inf give weight 0.
std::vector<double> relative_weights(std::span<const double> log_weights);

/// sum w_i v_i / sum w_i with w_i = exp(log_weight_i - max).
/// Throws std::invalid_argument on empty or mismatched input.
double weighted_mean(std::span<const double> values, std::span<const double> log_weights);
std::complex<double> weighted_mean(std::span<const std::complex<double>> values,
                                   std::span<const double> log_weights);

/// Standard error from B contiguous batches: std(batch means) / sqrt(B).
/// Returns nullopt when B < 2 (error undefined). Throws if fewer values than batches.
std::optional<double> batch_error(std::span<const double> values,
                                  std::span<const double> log_weights, int batches);

/// [begin, end) of batch b when n items are split into B contiguous batches.
std::pair<std::size_t, std::size_t> batch_range(std::size_t n, int batches, int b);

/// Standard error of the mean of per-batch values (sample std / sqrt(B)).
std::optional<double> spread_error(std::span<const double> batch_values);

/// Estimates an arbitrary statistic f(begin, end) over [0, n): value from the
/// full range, error from the spread of the statistic over contiguous batches.
/// Ratio estimators go through here so the whole ratio is batched.
template <class Statistic>
Estimate batched_estimate(std::size_t n, int batches, Statistic&& statistic) {
  Estimate est;
  est.value = statistic(std::size_t{0}, n);
  if (batches >= 2 && n >= static_cast<std::size_t>(batches)) {
    std::vector<double> per_batch(static_cast<std::size_t>(batches));
    for (int b = 0; b < batches; ++b) {
      const auto [lo, hi] = batch_range(n, batches, b);
      per_batch[static_cast<std::size_t>(b)] = statistic(lo, hi);
    }
    est.error = spread_error(per_batch);
  }
  return est;
}

}  // namespace gqmc
