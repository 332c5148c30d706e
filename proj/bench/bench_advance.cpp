#include <benchmark/benchmark.h>

#include "gqmc/hubbard.hpp"

namespace {

struct Setup {
  gqmc::HubbardParams params;
  gqmc::Lattice lattice;
  gqmc::IntegratorConfig integrator;

  explicit Setup(int L) {
    params.t = 1.0;
    params.U = 4.0;
    params.mu = 1.0;
    params.Lx = params.Ly = L;
    lattice = gqmc::build_lattice(params);
    integrator.dstep = 0.01;
  }
};

void BM_AdvanceSerial(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    state.PauseTiming();
    gqmc::Ensemble ensemble = gqmc::make_initial_ensemble(s.lattice.sites(), 64);
    state.ResumeTiming();
    gqmc::advance_ensemble_serial(ensemble, s.params, s.lattice, s.integrator, 7, 0, 10);
    benchmark::DoNotOptimize(ensemble.walkers.front().trajectory.log_weight());
  }
  state.SetItemsProcessed(state.iterations() * 64 * 10);
}

void BM_AdvanceParallel(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    state.PauseTiming();
    gqmc::Ensemble ensemble = gqmc::make_initial_ensemble(s.lattice.sites(), 64);
    state.ResumeTiming();
    gqmc::advance_ensemble(ensemble, s.params, s.lattice, s.integrator, 7, 0, 10);
    benchmark::DoNotOptimize(ensemble.walkers.front().trajectory.log_weight());
  }
  state.SetItemsProcessed(state.iterations() * 64 * 10);
}

}  // namespace

BENCHMARK(BM_AdvanceSerial)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdvanceParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
