#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gqmc/branching.hpp"
#include "gqmc/model.hpp"
#include "gqmc/phase_space.hpp"
#include "gqmc/sde.hpp"

namespace gqmc {

enum class Spin { up, down };

/// Interaction-noise sign factor: +1 for spin up, -s for spin down.
inline double noise_sign(Spin spin, const HubbardParams& params) noexcept {
  return spin == Spin::up ? 1.0 : -params.s();
}

/// Delta^(r)_ij,spin = t adj(i,j)
///   - delta_ij [ |U| (s n_jj,-spin - n_jj,spin + 1/2) - mu + f_spin xi_j^(r) ]
/// `xi` holds the per-site noise for one value of r; both spins share it.
Eigen::MatrixXd delta_matrix(const HubbardTrajectory& traj, const HubbardParams& params,
                             const Lattice& lattice, std::span<const double> xi, Spin spin);

struct SpinPair {
  Eigen::MatrixXd up;
  Eigen::MatrixXd dn;
};

/// dn/dtau = 1/2 { (I - n) Delta1 n + n Delta2 (I - n) } for both spins,
/// written out directly from the matrix form. Reference path; allocates.
SpinPair drift(const HubbardTrajectory& traj, const HubbardParams& params,
               const Lattice& lattice, std::span<const double> xi1,
               std::span<const double> xi2);

/// d(log weight)/dtau = -H(n_up, n_dn).
double log_weight_derivative(const HubbardTrajectory& traj, const HubbardParams& params,
                             const Lattice& lattice);

/// Allocation-free derivative of the flat trajectory state (n_up, n_dn, log
/// weight). Holds per-worker scratch; one instance per thread.
///
/// Uses dn = 1/2 (P + n (Q - P)) with P = Delta1 n and Q = Delta2 (I - n),
/// which needs a single dense product per spin.
class HubbardKernel {
 public:
  HubbardKernel(const HubbardParams& params, const Lattice& lattice);

  void derivative(std::span<const double> state, std::span<const double> xi1,
                  std::span<const double> xi2, std::span<double> out);

  [[nodiscard]] int modes() const noexcept { return modes_; }

 private:
  void spin_derivative(const double* n, const double* other, double f,
                       std::span<const double> xi1, std::span<const double> xi2, double* out);

  HubbardParams params_;
  const Lattice* lattice_;
  int modes_;
  Eigen::MatrixXd hop_;     // adjacency * n
  Eigen::MatrixXd p_;       // Delta1 n
  Eigen::MatrixXd r_;       // Q - P
  Eigen::MatrixXd nr_;      // n (Q - P)
  std::vector<double> d1_, d2_;
};

struct HubbardRunConfig {
  int trajectories = 1000;
  double tau_max = 1.0;
  IntegratorConfig integrator{};
  /// Steps between recorded grid points.
  int record_interval = 10;
  int batches = 20;
  BranchConfig branching{};
  std::uint64_t seed = 1;
  /// OpenMP worker count; 0 uses the runtime default. Never affects results.
  int threads = 0;

  void validate() const;
};

struct HubbardDiagnostics {
  std::size_t steps = 0;
  /// Steps on which some trajectory's weight stopped being a positive finite number.
  std::size_t weight_violations = 0;
  /// Trajectories removed because their state became non-finite.
  std::size_t invalid_killed = 0;
  std::size_t min_population = 0;
  std::size_t max_population = 0;
  std::vector<BranchEvent> branch_events;
};

struct HubbardRun {
  ObservableSeries series;
  HubbardDiagnostics diagnostics;
};

/// Fresh ensemble at infinite temperature; walker i uses stream id i.
Ensemble make_initial_ensemble(int modes, int trajectories);

/// Advances every valid walker `steps` steps from global step index
/// `first_step`. Walkers whose state turns non-finite are flagged invalid.
/// Returns the number of weight-positivity violations. Trajectory-parallel.
std::size_t advance_ensemble(Ensemble& ensemble, const HubbardParams& params,
                             const Lattice& lattice, const IntegratorConfig& integrator,
                             std::uint64_t seed, std::uint64_t first_step, int steps,
                             int threads = 0);

/// Single-threaded reference built on `drift` and `log_weight_derivative`.
std::size_t advance_ensemble_serial(Ensemble& ensemble, const HubbardParams& params,
                                    const Lattice& lattice, const IntegratorConfig& integrator,
                                    std::uint64_t seed, std::uint64_t first_step, int steps);

/// Weighted estimates over the valid walkers: energy_per_site,
/// energy_without_mu_per_site, filling (per site per spin), g2 (same-site,
/// opposite-spin, site-averaged). Ratios are batched whole.
ObservablePoint estimate_observables(const Ensemble& ensemble, const HubbardParams& params,
                                     const Lattice& lattice, int batches);

/// Imaginary-time evolution from infinite temperature with optional branching.
/// Throws ExtinctionError if every trajectory is lost.
HubbardRun run_imaginary_time(const HubbardParams& params, const Lattice& lattice,
                              const HubbardRunConfig& config,
                              const std::function<void(const BranchEvent&)>& on_branch = {});

}  // namespace gqmc
