#include "gqmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gqmc {

std::vector<double> relative_weights(std::span<const double> log_weights) {
  if (log_weights.empty()) throw std::invalid_argument("empty weight sequence");
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> w(log_weights.size());
  if (top == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("all weights are zero");
  }
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - top);
  return w;
}

namespace {

template <class T>
T weighted_mean_impl(std::span<const T> values, std::span<const double> log_weights) {
  if (values.empty()) throw std::invalid_argument("weighted_mean of empty sequence");
  if (values.size() != log_weights.size()) {
    throw std::invalid_argument("values and log-weights differ in length");
  }
  const auto w = relative_weights(log_weights);
  T numerator{};
  double denominator = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    numerator += w[i] * values[i];
    denominator += w[i];
  }
  return numerator / denominator;
}

}  // namespace

double weighted_mean(std::span<const double> values, std::span<const double> log_weights) {
  return weighted_mean_impl(values, log_weights);
}

std::complex<double> weighted_mean(std::span<const std::complex<double>> values,
                                   std::span<const double> log_weights) {
  return weighted_mean_impl(values, log_weights);
}

std::pair<std::size_t, std::size_t> batch_range(std::size_t n, int batches, int b) {
  const auto B = static_cast<std::size_t>(batches);
  const auto ub = static_cast<std::size_t>(b);
  return {ub * n / B, (ub + 1) * n / B};
}

std::optional<double> spread_error(std::span<const double> batch_values) {
  const std::size_t B = batch_values.size();
  if (B < 2) return std::nullopt;
  double mean = 0.0;
  for (double v : batch_values) mean += v;
  mean /= static_cast<double>(B);
  double ss = 0.0;
  for (double v : batch_values) ss += (v - mean) * (v - mean);
  const double variance = ss / static_cast<double>(B - 1);
  return std::sqrt(variance / static_cast<double>(B));
}

std::optional<double> batch_error(std::span<const double> values,
                                  std::span<const double> log_weights, int batches) {
  if (values.size() != log_weights.size()) {
    throw std::invalid_argument("values and log-weights differ in length");
  }
  if (batches < 2) return std::nullopt;
  if (values.size() < static_cast<std::size_t>(batches)) {
    throw std::invalid_argument("fewer values than batches");
  }
  std::vector<double> means(static_cast<std::size_t>(batches));
  for (int b = 0; b < batches; ++b) {
    const auto [lo, hi] = batch_range(values.size(), batches, b);
    means[static_cast<std::size_t>(b)] =
        weighted_mean(values.subspan(lo, hi - lo), log_weights.subspan(lo, hi - lo));
  }
  return spread_error(means);
}

}  // namespace gqmc
