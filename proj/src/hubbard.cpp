#include "gqmc/hubbard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

#include "gqmc/noise.hpp"
#include "gqmc/stats.hpp"

namespace gqmc {

namespace {

void check_noise(std::span<const double> xi, int M) {
  if (static_cast<int>(xi.size()) != M) {
    throw DimensionError("noise vector length must equal the site count");
  }
}

void check_lattice(const HubbardTrajectory& traj, const Lattice& lattice) {
  if (traj.modes() != lattice.sites()) {
    throw DimensionError("trajectory has " + std::to_string(traj.modes()) +
                         " modes but lattice has " + std::to_string(lattice.sites()) + " sites");
  }
}

}  // namespace

Eigen::MatrixXd delta_matrix(const HubbardTrajectory& traj, const HubbardParams& params,
                             const Lattice& lattice, std::span<const double> xi, Spin spin) {
  check_lattice(traj, lattice);
  const int M = lattice.sites();
  check_noise(xi, M);
  const auto& own = spin == Spin::up ? traj.n_up() : traj.n_dn();
  const auto& other = spin == Spin::up ? traj.n_dn() : traj.n_up();
  const double f = noise_sign(spin, params);
  Eigen::MatrixXd delta = params.t * lattice.adjacency.cast<double>();
  for (int j = 0; j < M; ++j) {
    delta(j, j) -= params.abs_U() * (params.s() * other(j, j) - own(j, j) + 0.5) - params.mu +
                   f * xi[static_cast<std::size_t>(j)];
  }
  return delta;
}

SpinPair drift(const HubbardTrajectory& traj, const HubbardParams& params,
               const Lattice& lattice, std::span<const double> xi1,
               std::span<const double> xi2) {
  const int M = lattice.sites();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(M, M);
  auto one_spin = [&](Spin spin) -> Eigen::MatrixXd {
    const Eigen::MatrixXd n = spin == Spin::up ? traj.n_up() : traj.n_dn();
    const Eigen::MatrixXd d1 = delta_matrix(traj, params, lattice, xi1, spin);
    const Eigen::MatrixXd d2 = delta_matrix(traj, params, lattice, xi2, spin);
    return 0.5 * ((I - n) * d1 * n + n * d2 * (I - n));
  };
  return {one_spin(Spin::up), one_spin(Spin::down)};
}

double log_weight_derivative(const HubbardTrajectory& traj, const HubbardParams& params,
                             const Lattice& lattice) {
  return -hamiltonian_value(traj.n_up(), traj.n_dn(), params, lattice);
}

HubbardKernel::HubbardKernel(const HubbardParams& params, const Lattice& lattice)
    : params_(params),
      lattice_(&lattice),
      modes_(lattice.sites()),
      hop_(modes_, modes_),
      p_(modes_, modes_),
      r_(modes_, modes_),
      nr_(modes_, modes_),
      d1_(static_cast<std::size_t>(modes_)),
      d2_(static_cast<std::size_t>(modes_)) {}

void HubbardKernel::spin_derivative(const double* n_ptr, const double* other_ptr, double f,
                                    std::span<const double> xi1, std::span<const double> xi2,
                                    double* out_ptr) {
  const int M = modes_;
  Eigen::Map<const Eigen::MatrixXd> n(n_ptr, M, M);
  Eigen::Map<const Eigen::MatrixXd> other(other_ptr, M, M);
  Eigen::Map<Eigen::MatrixXd> out(out_ptr, M, M);
  const double t = params_.t;
  const double absU = params_.abs_U();
  const double s = params_.s();
  for (int j = 0; j < M; ++j) {
    const double base = absU * (s * other(j, j) - n(j, j) + 0.5) - params_.mu;
    d1_[static_cast<std::size_t>(j)] = base + f * xi1[static_cast<std::size_t>(j)];
    d2_[static_cast<std::size_t>(j)] = base + f * xi2[static_cast<std::size_t>(j)];
  }
  const auto& neighbours = lattice_->neighbours;
  for (int k = 0; k < M; ++k) {
    for (int i = 0; i < M; ++i) {
      double acc = 0.0;
      for (const auto& [j, count] : neighbours[static_cast<std::size_t>(i)]) {
        acc += count * n(j, k);
      }
      hop_(i, k) = acc;
    }
  }
  for (int k = 0; k < M; ++k) {
    for (int i = 0; i < M; ++i) {
      const double d1 = d1_[static_cast<std::size_t>(i)];
      const double d2 = d2_[static_cast<std::size_t>(i)];
      p_(i, k) = t * hop_(i, k) - d1 * n(i, k);
      r_(i, k) = -2.0 * t * hop_(i, k) + (d1 + d2) * n(i, k);
    }
    r_(k, k) -= d2_[static_cast<std::size_t>(k)];
  }
  if (t != 0.0) {
    for (int i = 0; i < M; ++i) {
      for (const auto& [j, count] : neighbours[static_cast<std::size_t>(i)]) {
        r_(i, j) += t * count;
      }
    }
  }
  nr_.noalias() = n * r_;
  out = 0.5 * (p_ + nr_);
}

void HubbardKernel::derivative(std::span<const double> state, std::span<const double> xi1,
                               std::span<const double> xi2, std::span<double> out) {
  const int M = modes_;
  const std::size_t block = static_cast<std::size_t>(M) * M;
  const double* up = state.data();
  const double* dn = state.data() + block;
  spin_derivative(up, dn, 1.0, xi1, xi2, out.data());
  spin_derivative(dn, up, -params_.s(), xi1, xi2, out.data() + block);

  double hopping = 0.0;
  double interaction = 0.0;
  double number = 0.0;
  const auto& neighbours = lattice_->neighbours;
  for (int i = 0; i < M; ++i) {
    for (const auto& [j, count] : neighbours[static_cast<std::size_t>(i)]) {
      const std::size_t ij = static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * M;
      hopping += count * (up[ij] + dn[ij]);
    }
    const std::size_t ii = static_cast<std::size_t>(i) * (M + 1);
    interaction += up[ii] * dn[ii];
    number += up[ii] + dn[ii];
  }
  out[2 * block] = params_.t * hopping - params_.U * interaction + params_.mu * number;
}

void HubbardRunConfig::validate() const {
  if (trajectories < 1) throw std::invalid_argument("trajectories must be >= 1");
  if (!(tau_max >= 0.0)) throw std::invalid_argument("tau_max must be >= 0");
  if (record_interval < 1) throw std::invalid_argument("record_interval must be >= 1");
  if (batches < 1) throw std::invalid_argument("batches must be >= 1");
  integrator.validate();
  branching.validate();
}

Ensemble make_initial_ensemble(int modes, int trajectories) {
  Ensemble ensemble;
  ensemble.walkers.reserve(static_cast<std::size_t>(trajectories));
  const HubbardTrajectory start = init_infinite_temperature(modes);
  for (int i = 0; i < trajectories; ++i) {
    ensemble.walkers.push_back(Walker{start, static_cast<std::uint64_t>(i), true});
  }
  return ensemble;
}

namespace {

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

template <class Derivative>
std::size_t advance_walker(Walker& walker, Derivative&& derivative_from_noise,
                           std::vector<double>& noise, double variance,
                           const IntegratorConfig& integrator, StepScratch& scratch,
                           std::uint64_t seed, std::uint64_t first_step, int steps) {
  std::size_t violations = 0;
  const std::size_t M = noise.size() / 2;
  for (int k = 0; k < steps; ++k) {
    const NoiseStream stream{seed, walker.stream_id, first_step + static_cast<std::uint64_t>(k),
                             NoiseDomain::trajectory};
    gaussian_draws(stream, variance, noise);
    const std::span<const double> xi1(noise.data(), M);
    const std::span<const double> xi2(noise.data() + M, M);
    auto derivative = [&](std::span<const double> y, std::span<double> dy) {
      derivative_from_noise(y, xi1, xi2, dy);
    };
    const bool ok = step(walker.trajectory.values(), derivative, integrator, scratch);
    const double lw = walker.trajectory.log_weight();
    if (!std::isfinite(lw)) ++violations;
    if (!ok) {
      walker.valid = false;
      break;
    }
  }
  return violations;
}

}  // namespace

std::size_t advance_ensemble(Ensemble& ensemble, const HubbardParams& params,
                             const Lattice& lattice, const IntegratorConfig& integrator,
                             std::uint64_t seed, std::uint64_t first_step, int steps,
                             int threads) {
  const int M = lattice.sites();
  const double variance = 2.0 * params.abs_U() / integrator.dstep;
  const auto count = static_cast<std::ptrdiff_t>(ensemble.walkers.size());
  std::size_t violations = 0;
#pragma omp parallel num_threads(resolve_threads(threads)) reduction(+ : violations)
  {
    HubbardKernel kernel(params, lattice);
    StepScratch scratch;
    std::vector<double> noise(2 * static_cast<std::size_t>(M));
    auto derivative = [&kernel](std::span<const double> y, std::span<const double> xi1,
                                std::span<const double> xi2, std::span<double> dy) {
      kernel.derivative(y, xi1, xi2, dy);
    };
#pragma omp for schedule(static)
    for (std::ptrdiff_t w = 0; w < count; ++w) {
      Walker& walker = ensemble.walkers[static_cast<std::size_t>(w)];
      if (!walker.valid) continue;
      violations += advance_walker(walker, derivative, noise, variance, integrator, scratch, seed,
                                   first_step, steps);
    }
  }
  return violations;
}

std::size_t advance_ensemble_serial(Ensemble& ensemble, const HubbardParams& params,
                                    const Lattice& lattice, const IntegratorConfig& integrator,
                                    std::uint64_t seed, std::uint64_t first_step, int steps) {
  const int M = lattice.sites();
  const double variance = 2.0 * params.abs_U() / integrator.dstep;
  HubbardTrajectory probe(M);
  StepScratch scratch;
  std::vector<double> noise(2 * static_cast<std::size_t>(M));
  auto derivative = [&](std::span<const double> y, std::span<const double> xi1,
                        std::span<const double> xi2, std::span<double> dy) {
    std::copy(y.begin(), y.end(), probe.values().begin());
    const SpinPair dn = drift(probe, params, lattice, xi1, xi2);
    const std::size_t block = static_cast<std::size_t>(M) * M;
    std::copy(dn.up.data(), dn.up.data() + block, dy.begin());
    std::copy(dn.dn.data(), dn.dn.data() + block, dy.begin() + static_cast<std::ptrdiff_t>(block));
    dy[2 * block] = log_weight_derivative(probe, params, lattice);
  };
  std::size_t violations = 0;
  for (auto& walker : ensemble.walkers) {
    if (!walker.valid) continue;
    violations += advance_walker(walker, derivative, noise, variance, integrator, scratch, seed,
                                 first_step, steps);
  }
  return violations;
}

ObservablePoint estimate_observables(const Ensemble& ensemble, const HubbardParams& params,
                                     const Lattice& lattice, int batches) {
  std::vector<const Walker*> live;
  live.reserve(ensemble.walkers.size());
  for (const auto& w : ensemble.walkers) {
    if (w.valid) live.push_back(&w);
  }
  if (live.empty()) throw ExtinctionError("no valid trajectories to estimate from");

  const std::size_t n = live.size();
  const int M = lattice.sites();
  const auto uM = static_cast<std::size_t>(M);
  std::vector<double> log_w(n), energy(n), energy_no_mu(n), filling(n);
  std::vector<double> up(n * uM), dn(n * uM);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& traj = live[i]->trajectory;
    log_w[i] = traj.log_weight();
    const double h0 = hamiltonian_value_without_mu(traj.n_up(), traj.n_dn(), params, lattice);
    const double number = traj.n_up().trace() + traj.n_dn().trace();
    energy[i] = (h0 - params.mu * number) / M;
    energy_no_mu[i] = h0 / M;
    filling[i] = number / (2.0 * M);
    for (int j = 0; j < M; ++j) {
      up[i * uM + static_cast<std::size_t>(j)] = traj.n_up()(j, j);
      dn[i * uM + static_cast<std::size_t>(j)] = traj.n_dn()(j, j);
    }
  }
  const std::vector<double> w = relative_weights(log_w);

  auto mean_of = [&](const std::vector<double>& values) {
    return [&values, &w](std::size_t lo, std::size_t hi) {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        num += w[i] * values[i];
        den += w[i];
      }
      return num / den;
    };
  };
  auto g2 = [&](std::size_t lo, std::size_t hi) {
    double total = 0.0;
    for (std::size_t j = 0; j < uM; ++j) {
      double sw = 0.0, s_up = 0.0, s_dn = 0.0, s_pair = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        const double a = up[i * uM + j];
        const double b = dn[i * uM + j];
        sw += w[i];
        s_up += w[i] * a;
        s_dn += w[i] * b;
        s_pair += w[i] * a * b;
      }
      total += s_pair * sw / (s_up * s_dn);
    }
    return total / static_cast<double>(uM);
  };

  ObservablePoint point;
  point.population = ensemble.walkers.size();
  point.estimates["energy_per_site"] = batched_estimate(n, batches, mean_of(energy));
  point.estimates["energy_without_mu_per_site"] =
      batched_estimate(n, batches, mean_of(energy_no_mu));
  point.estimates["filling"] = batched_estimate(n, batches, mean_of(filling));
  point.estimates["g2"] = batched_estimate(n, batches, g2);
  double mean_lw = 0.0;
  for (double l : log_w) mean_lw += l;
  point.mean_log_weight = mean_lw / static_cast<double>(n);
  return point;
}

namespace {

std::size_t remove_invalid(Ensemble& ensemble) {
  const auto before = ensemble.walkers.size();
  std::erase_if(ensemble.walkers, [](const Walker& w) { return !w.valid; });
  return before - ensemble.walkers.size();
}

}  // namespace

HubbardRun run_imaginary_time(const HubbardParams& params, const Lattice& lattice,
                              const HubbardRunConfig& config,
                              const std::function<void(const BranchEvent&)>& on_branch) {
  params.validate();
  config.validate();
  if (lattice.sites() != params.sites()) {
    throw DimensionError("lattice does not match Hubbard parameters");
  }

  HubbardRun run;
  auto& diag = run.diagnostics;
  Ensemble ensemble = make_initial_ensemble(lattice.sites(), config.trajectories);
  if (config.branching.enabled()) {
    ensemble.lower_bound = static_cast<std::size_t>(config.branching.target_population) / 2;
    ensemble.upper_bound = static_cast<std::size_t>(config.branching.target_population) * 2;
  }
  diag.min_population = diag.max_population = ensemble.population();

  const double dtau = config.integrator.dstep;
  const auto total_steps = static_cast<std::uint64_t>(std::llround(config.tau_max / dtau));
  const auto record_every = static_cast<std::uint64_t>(config.record_interval);
  const auto branch_every = static_cast<std::uint64_t>(config.branching.interval);

  auto record = [&](std::uint64_t step) {
    diag.invalid_killed += remove_invalid(ensemble);
    if (ensemble.walkers.empty()) {
      throw ExtinctionError("all trajectories became invalid by tau = " +
                            std::to_string(static_cast<double>(step) * dtau));
    }
    ObservablePoint point = estimate_observables(ensemble, params, lattice, config.batches);
    point.time = static_cast<double>(step) * dtau;
    run.series.points.push_back(std::move(point));
  };

  record(0);
  std::uint64_t step = 0;
  while (step < total_steps) {
    std::uint64_t next = std::min(total_steps, (step / record_every + 1) * record_every);
    if (config.branching.enabled()) {
      next = std::min(next, (step / branch_every + 1) * branch_every);
    }
    diag.weight_violations += advance_ensemble(ensemble, params, lattice, config.integrator,
                                               config.seed, step, static_cast<int>(next - step),
                                               config.threads);
    step = next;
    diag.steps = step;

    if (config.branching.enabled() && step % branch_every == 0) {
      BranchConfig bc = config.branching;
      bc.seed = config.seed;
      const BranchEvent event = branch(ensemble, bc);
      diag.invalid_killed += event.killed_invalid;
      diag.branch_events.push_back(event);
      if (on_branch) on_branch(event);
    }
    diag.min_population = std::min(diag.min_population, ensemble.population());
    diag.max_population = std::max(diag.max_population, ensemble.population());
    if (step % record_every == 0 || step == total_steps) record(step);
  }
  return run;
}

}  // namespace gqmc
