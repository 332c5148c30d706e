#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "gqmc/config.hpp"
#include "gqmc/phase_space.hpp"

namespace gqmc {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_extinction = 3,
  exit_oracle = 4,
};

/// Entry point of the gqmc executable. Worker count comes from the
/// GQMC_NUM_THREADS environment variable and never changes results.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Runs one resolved job, writing <output>, <output>.manifest and <output>.log.
int run_job(const ResolvedConfig& config, int threads, std::ostream& out);

/// CSV writers; numbers carry 17 significant digits, missing errors print as nan.
void write_hubbard_csv(std::ostream& out, const ObservableSeries& series);
void write_dissociation_csv(std::ostream& out, const ObservableSeries& series);

/// Per-identity deviations for a seeded battery of random kernel states
/// (mode counts cycle 1, 2, 3; identity columns are nan at 3 modes).
struct KernelCheckRow {
  int state = 0;
  int modes = 0;
  double trace = 0.0;
  double moments = 0.0;
  double omega_scaling = 0.0;
  double normal = 0.0;
  double mixed = 0.0;
  double antinormal = 0.0;
};

std::vector<KernelCheckRow> kernel_check(int states, std::uint64_t seed);

}  // namespace gqmc
