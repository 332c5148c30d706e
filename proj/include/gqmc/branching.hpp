#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gqmc/phase_space.hpp"

namespace gqmc {

/// Raised when no trajectory survives (all invalid or all zero weight).
struct ExtinctionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A trajectory together with its noise stream and validity flag.
struct Walker {
  HubbardTrajectory trajectory;
  std::uint64_t stream_id = 0;
  bool valid = true;
};

struct Ensemble {
  std::vector<Walker> walkers;
  std::uint64_t generation = 0;
  /// Expected population band under population control.
  std::size_t lower_bound = 0;
  std::size_t upper_bound = 0;

  [[nodiscard]] std::size_t population() const noexcept { return walkers.size(); }
};

struct BranchConfig {
  /// Steps between branch events; 0 disables branching.
  int interval = 0;
  int target_population = 2;
  std::uint64_t seed = 0;

  [[nodiscard]] bool enabled() const noexcept { return interval > 0; }
  void validate() const;
};

/// Run-log record of one branch event.
struct BranchEvent {
  std::uint64_t generation = 0;
  std::size_t population_before = 0;
  std::size_t population_after = 0;
  std::size_t killed_invalid = 0;
  /// Shannon entropy of the normalised pre-branch weights.
  double weight_entropy = 0.0;
};

/// Stochastic-rounding resampling. Walker i with relative weight
/// v_i = w_i * target / sum(w) is copied floor(v_i + u_i) times, u_i ~ U[0,1)
/// drawn from the branching stream indexed by (generation, i). Survivors all
/// carry weight sum(w) / target. Invalid walkers are dropped first. Clones get
/// fresh stream ids derived from (parent, generation, copy). Throws
/// ExtinctionError if nothing survives.
BranchEvent branch(Ensemble& ensemble, const BranchConfig& config);

}  // namespace gqmc
