#include "gqmc/branching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gqmc/noise.hpp"

namespace gqmc {

namespace {

// Zero weight (log weight -inf) is a legitimate state; anything else non-finite is not.
bool usable(const Walker& walker) {
  if (!walker.valid) return false;
  const auto values = walker.trajectory.values();
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    if (!std::isfinite(values[k])) return false;
  }
  const double lw = walker.trajectory.log_weight();
  return !std::isnan(lw) && lw != std::numeric_limits<double>::infinity();
}

}  // namespace

void BranchConfig::validate() const {
  if (interval < 0) throw std::invalid_argument("branch interval must be >= 0");
  if (enabled() && target_population < 2) {
    throw std::invalid_argument("branch target population must be >= 2");
  }
}

BranchEvent branch(Ensemble& ensemble, const BranchConfig& config) {
  BranchEvent event;
  event.generation = ensemble.generation;
  event.population_before = ensemble.population();

  std::vector<Walker> alive;
  alive.reserve(ensemble.walkers.size());
  for (auto& walker : ensemble.walkers) {
    if (usable(walker)) {
      alive.push_back(std::move(walker));
    } else {
      ++event.killed_invalid;
    }
  }
  if (alive.empty()) {
    ensemble.walkers.clear();
    throw ExtinctionError("branching: every trajectory is invalid");
  }
  if (!std::any_of(alive.begin(), alive.end(), [](const Walker& w) {
        return std::isfinite(w.trajectory.log_weight());
      })) {
    ensemble.walkers.clear();
    throw ExtinctionError("branching: every trajectory has zero weight");
  }

  double top = -std::numeric_limits<double>::infinity();
  for (const auto& w : alive) top = std::max(top, w.trajectory.log_weight());
  std::vector<double> weight(alive.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alive.size(); ++i) {
    const double lw = alive[i].trajectory.log_weight();
    weight[i] = std::isinf(lw) ? 0.0 : std::exp(lw - top);
    total += weight[i];
  }
  for (double w : weight) {
    if (w > 0.0) {
      const double p = w / total;
      event.weight_entropy -= p * std::log(p);
    }
  }

  const double target = config.target_population;
  const double survivor_log_weight = top + std::log(total) - std::log(target);

  std::vector<Walker> next;
  next.reserve(static_cast<std::size_t>(config.target_population) * 2);
  NoiseStream rounding{config.seed, ensemble.generation, 0, NoiseDomain::branching};
  for (std::size_t i = 0; i < alive.size(); ++i) {
    const double v = weight[i] * (target / total);
    const double u = uniform_draw(rounding, static_cast<std::uint32_t>(i));
    const auto copies = static_cast<std::size_t>(std::floor(v + u));
    for (std::size_t c = 0; c < copies; ++c) {
      Walker clone{alive[i].trajectory,
                   derive_stream_id(config.seed, alive[i].stream_id, ensemble.generation, c),
                   true};
      clone.trajectory.log_weight() = survivor_log_weight;
      next.push_back(std::move(clone));
    }
  }
  if (next.empty()) {
    ensemble.walkers.clear();
    throw ExtinctionError("branching: no trajectory survived resampling");
  }

  ensemble.walkers = std::move(next);
  ensemble.generation += 1;
  event.population_after = ensemble.population();
  return event;
}

}  // namespace gqmc
