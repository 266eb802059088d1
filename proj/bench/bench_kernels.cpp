// Serial reference against the OpenMP path for each parallel kernel.
// Arg 0 selects Exec::Serial, 1 Exec::Parallel.

#include <benchmark/benchmark.h>

#include <numbers>

#include "omk/bloch.hpp"
#include "omk/disorder.hpp"
#include "omk/dynamics.hpp"
#include "omk/stripe.hpp"

namespace {

using namespace omk;

Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::Serial : Exec::Parallel;
}

OmParams params() {
  auto p = OmParams::from_detuning(2.0, 4.0);
  p.delta_theta = -2.0 * std::numbers::pi / 3.0;
  p.kappa_C = decay_rate(2e6, 5e7);
  p.kappa_M = decay_rate(460.0, 1e6);
  return p;
}

void BM_BandStructure(benchmark::State& state) {
  const auto k = bz_grid(48);
  for (auto _ : state) benchmark::DoNotOptimize(band_structure(params(), k, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * k.size());
}
BENCHMARK(BM_BandStructure)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_StripeBands(benchmark::State& state) {
  const auto k = default_kx_grid(101);
  for (auto _ : state)
    benchmark::DoNotOptimize(stripe_bands(params(), 21, k, exec_of(state), false));
  state.SetItemsProcessed(state.iterations() * k.size());
}
BENCHMARK(BM_StripeBands)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Spmv(benchmark::State& state) {
  const auto L = build_finite_lattice(16, 11, true);
  const auto p = params();
  const SparseRowMatrix H = assemble_hamiltonian(L, p, {}, 0.0, nullptr, p.omega_M);
  const Eigen::VectorXcd x = Eigen::VectorXcd::Random(H.cols());
  Eigen::VectorXcd y(H.rows());
  const Exec exec = exec_of(state);
  for (auto _ : state) {
    spmv(H, x.data(), y.data(), exec);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * H.nonZeros());
}
BENCHMARK(BM_Spmv)->Arg(0)->Arg(1);

TransferScenario small_scenario(Exec exec) {
  ScenarioConfig c;
  c.Nx = 8;
  c.Ny = 6;
  c.emitter = {0, 1, Basis::B};
  c.receiver = {0, 5, Basis::B};
  c.duration_units = 3.0;
  c.Q_C = 5e5;
  auto sc = make_scenario(c);
  sc.exec = exec;
  return sc;
}

void BM_OptimizerScan(benchmark::State& state) {
  const auto sc = small_scenario(exec_of(state));
  for (auto _ : state) benchmark::DoNotOptimize(optimize_receiver(sc, sc.dt_opt));
}
BENCHMARK(BM_OptimizerScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DisorderSweep(benchmark::State& state) {
  const auto sc = small_scenario(Exec::Serial);
  const auto clean = run_transfer(sc);
  DisorderSpec spec;
  spec.seed = 1;
  spec.n_realizations = 4;
  const std::vector<double> W{1e-3};
  for (auto _ : state)
    benchmark::DoNotOptimize(fidelity_sweep(sc, clean, W, spec, exec_of(state)));
}
BENCHMARK(BM_DisorderSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
