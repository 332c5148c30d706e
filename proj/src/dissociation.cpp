#include "gqmc/dissociation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <omp.h>

#include "gqmc/noise.hpp"
#include "gqmc/stats.hpp"

namespace gqmc {

std::array<double, DissociationState::flat_size> DissociationState::flatten() const {
  return {alpha.real(), alpha.imag(), alpha_plus.real(), alpha_plus.imag(),
          n1.real(),    n1.imag(),    n2.real(),         n2.imag(),
          m.real(),     m.imag(),     m_plus.real(),     m_plus.imag()};
}

DissociationState DissociationState::unflatten(std::span<const double> f) {
  if (f.size() != flat_size) throw std::invalid_argument("dissociation state needs 12 values");
  return {{f[0], f[1]}, {f[2], f[3]}, {f[4], f[5]}, {f[6], f[7]}, {f[8], f[9]}, {f[10], f[11]}};
}

DissociationState DissociationState::coherent(double n_mean) {
  if (!(n_mean >= 0.0)) throw std::invalid_argument("mean molecule number must be >= 0");
  const double amplitude = std::sqrt(n_mean);
  DissociationState s;
  s.alpha = amplitude;
  s.alpha_plus = amplitude;
  return s;
}

DissociationState dissociation_derivative(const DissociationState& x, cplx zeta1, cplx zeta2,
                                          StatisticsKind kind) {
  static const cplx i_unit{0.0, 1.0};
  static const cplx sqrt_i = std::polar(1.0, std::numbers::pi / 4.0);
  const double pm = statistics_sign(kind);
  const cplx z1c = std::conj(zeta1);
  const cplx z2c = std::conj(zeta2);

  const cplx exchange = i_unit * (x.alpha_plus * x.m - x.alpha * x.m_plus);
  const cplx pair_noise = x.m * z1c + x.m_plus * z2c;
  const cplx blocking = 1.0 + pm * x.n1 + pm * x.n2;

  DissociationState d;
  d.n1 = exchange + pm * sqrt_i * x.n1 * pair_noise;
  d.n2 = exchange + pm * sqrt_i * x.n2 * pair_noise;
  d.m = -i_unit * x.alpha * blocking + sqrt_i * (pm * x.m * x.m * z1c + x.n1 * x.n2 * z2c);
  d.m_plus = i_unit * x.alpha_plus * blocking +
             sqrt_i * (x.n1 * x.n2 * z1c + pm * x.m_plus * x.m_plus * z2c);
  d.alpha = -i_unit * x.m - sqrt_i * zeta1;
  d.alpha_plus = i_unit * x.m_plus + sqrt_i * zeta2;
  return d;
}

void DissociationRunConfig::validate() const {
  if (trajectories < 1) throw std::invalid_argument("trajectories must be >= 1");
  if (!(t_max >= 0.0)) throw std::invalid_argument("time_max must be >= 0");
  if (record_interval < 1) throw std::invalid_argument("record_interval must be >= 1");
  if (batches < 1) throw std::invalid_argument("batches must be >= 1");
  if (!(error_ceiling > 0.0)) throw std::invalid_argument("error_ceiling must be positive");
  integrator.validate();
}

namespace {

struct Sample {
  std::array<double, DissociationState::flat_size> values{};
  bool valid = true;
};

ObservablePoint estimate(const std::vector<Sample>& samples, int batches) {
  const std::size_t n = samples.size();
  std::vector<double> n1(n), n2(n), mol(n), n1_imag(n), mol_imag(n), conserved(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = DissociationState::unflatten(samples[i].values);
    const cplx molecules = x.alpha_plus * x.alpha;
    n1[i] = x.n1.real();
    n2[i] = x.n2.real();
    mol[i] = molecules.real();
    n1_imag[i] = x.n1.imag();
    mol_imag[i] = molecules.imag();
    conserved[i] = molecules.real() + 0.5 * (x.n1.real() + x.n2.real());
  }
  auto mean_of = [](const std::vector<double>& v) {
    return [&v](std::size_t lo, std::size_t hi) {
      double acc = 0.0;
      for (std::size_t i = lo; i < hi; ++i) acc += v[i];
      return acc / static_cast<double>(hi - lo);
    };
  };
  ObservablePoint point;
  point.population = n;
  point.estimates["n1"] = batched_estimate(n, batches, mean_of(n1));
  point.estimates["n2"] = batched_estimate(n, batches, mean_of(n2));
  point.estimates["molecules"] = batched_estimate(n, batches, mean_of(mol));
  point.estimates["n1_imag"] = batched_estimate(n, batches, mean_of(n1_imag));
  point.estimates["molecules_imag"] = batched_estimate(n, batches, mean_of(mol_imag));
  point.estimates["conserved"] = batched_estimate(n, batches, mean_of(conserved));
  return point;
}

}  // namespace

ObservableSeries run_realtime(StatisticsKind kind, double n_mean,
                              const DissociationRunConfig& config) {
  config.validate();
  const DissociationState start = DissociationState::coherent(n_mean);
  std::vector<Sample> samples(static_cast<std::size_t>(config.trajectories),
                              Sample{start.flatten(), true});

  const double dt = config.integrator.dstep;
  const auto total_steps = static_cast<std::uint64_t>(std::llround(config.t_max / dt));
  const auto record_every = static_cast<std::uint64_t>(config.record_interval);
  // zeta = (eta1 + i eta2)/sqrt(2) with Var(eta) = 1/dt.
  const double variance = 1.0 / dt;
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;

  ObservableSeries series;
  auto record = [&](std::uint64_t step) -> bool {
    const double time = static_cast<double>(step) * dt;
    bool all_valid = true;
    for (const auto& s : samples) all_valid = all_valid && s.valid;
    if (!all_valid) {
      series.truncated = true;
      series.truncated_at = time;
      return false;
    }
    ObservablePoint point = estimate(samples, config.batches);
    point.time = time;
    const auto& err = point.at("n1").error;
    if (err && !(*err <= config.error_ceiling)) {
      series.truncated = true;
      series.truncated_at = time;
      return false;
    }
    series.points.push_back(std::move(point));
    return true;
  };

  if (!record(0)) return series;
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
  const auto count = static_cast<std::ptrdiff_t>(samples.size());
  std::uint64_t step = 0;
  while (step < total_steps) {
    const std::uint64_t next = std::min(total_steps, (step / record_every + 1) * record_every);
#pragma omp parallel num_threads(threads)
    {
      StepScratch scratch;
      std::vector<double> eta(4);
#pragma omp for schedule(static)
      for (std::ptrdiff_t w = 0; w < count; ++w) {
        Sample& sample = samples[static_cast<std::size_t>(w)];
        for (std::uint64_t k = step; k < next && sample.valid; ++k) {
          gaussian_draws(NoiseStream{config.seed, static_cast<std::uint64_t>(w), k,
                                     NoiseDomain::trajectory},
                         variance, eta);
          const cplx zeta1 = cplx(eta[0], eta[1]) * inv_sqrt2;
          const cplx zeta2 = cplx(eta[2], eta[3]) * inv_sqrt2;
          auto derivative = [&](std::span<const double> y, std::span<double> dy) {
            const auto d =
                dissociation_derivative(DissociationState::unflatten(y), zeta1, zeta2, kind);
            const auto flat = d.flatten();
            std::copy(flat.begin(), flat.end(), dy.begin());
          };
          sample.valid = gqmc::step(sample.values, derivative, config.integrator, scratch);
        }
      }
    }
    step = next;
    if (!record(step)) break;
  }
  return series;
}

}  // namespace gqmc
