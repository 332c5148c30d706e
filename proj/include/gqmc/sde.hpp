#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace gqmc {

enum class Scheme { stratonovich_midpoint, euler_maruyama };

struct IntegratorConfig {
  double dstep = 0.01;
  int midpoint_iterations = 4;
  Scheme scheme = Scheme::stratonovich_midpoint;

  void validate() const {
    if (!(dstep > 0.0) || !std::isfinite(dstep)) {
      throw std::invalid_argument("integrator step must be positive");
    }
    if (midpoint_iterations < 1) {
      throw std::invalid_argument("midpoint_iterations must be >= 1");
    }
  }
};

/// Reusable buffers for one worker.
struct StepScratch {
  std::vector<double> midpoint;
  std::vector<double> derivative;

  void resize(std::size_t n) {
    midpoint.resize(n);
    derivative.resize(n);
  }
};

namespace detail {
inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}
}  // namespace detail

/// Semi-implicit midpoint step for a Stratonovich SDE. The derivative
/// callable has signature void(std::span<const double> y, std::span<double> dy)
/// and must hold its noise values fixed across calls within a step.
///
/// Iterates ybar <- y + (h/2) D(ybar) from ybar = y, then sets y <- 2 ybar - y.
/// Returns false (leaving y partially updated) on a non-finite derivative.
template <class Derivative>
bool step_stratonovich(std::span<double> y, Derivative&& derivative,
                       const IntegratorConfig& config, StepScratch& scratch) {
  const std::size_t n = y.size();
  scratch.resize(n);
  std::span<double> ybar(scratch.midpoint.data(), n);
  std::span<double> dy(scratch.derivative.data(), n);
  std::copy(y.begin(), y.end(), ybar.begin());
  const double half = 0.5 * config.dstep;
  for (int iter = 0; iter < config.midpoint_iterations; ++iter) {
    derivative(std::span<const double>(ybar), dy);
    if (!detail::all_finite(dy)) return false;
    for (std::size_t k = 0; k < n; ++k) ybar[k] = y[k] + half * dy[k];
  }
  for (std::size_t k = 0; k < n; ++k) y[k] = 2.0 * ybar[k] - y[k];
  return detail::all_finite(y);
}

/// Explicit Euler-Maruyama step y <- y + h D(y).
template <class Derivative>
bool step_euler_maruyama(std::span<double> y, Derivative&& derivative,
                         const IntegratorConfig& config, StepScratch& scratch) {
  const std::size_t n = y.size();
  scratch.resize(n);
  std::span<double> dy(scratch.derivative.data(), n);
  derivative(std::span<const double>(y), dy);
  if (!detail::all_finite(dy)) return false;
  for (std::size_t k = 0; k < n; ++k) y[k] += config.dstep * dy[k];
  return detail::all_finite(y);
}

template <class Derivative>
bool step(std::span<double> y, Derivative&& derivative, const IntegratorConfig& config,
          StepScratch& scratch) {
  if (config.scheme == Scheme::euler_maruyama) {
    return step_euler_maruyama(y, std::forward<Derivative>(derivative), config, scratch);
  }
  return step_stratonovich(y, std::forward<Derivative>(derivative), config, scratch);
}

}  // namespace gqmc
