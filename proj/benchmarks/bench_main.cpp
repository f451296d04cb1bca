#include <benchmark/benchmark.h>

#include <vector>

#include "heraldsim/analytic.hpp"
#include "heraldsim/clicks.hpp"
#include "heraldsim/fock.hpp"
#include "heraldsim/homodyne.hpp"
#include "heraldsim/modes.hpp"
#include "heraldsim/tomo.hpp"

namespace hs = heraldsim;

namespace {

hs::fock::Matrix lossy_f1_state() {
  const auto grid = hs::modes::TimeGrid::from_window();
  const auto g1 = hs::modes::make_trigger_mode(230e-9, 53e6, grid);
  const auto g2 = hs::modes::make_trigger_mode(270e-9, 53e6, grid);
  const auto sym = hs::modes::make_symmetric_antisymmetric(g1, g2);
  const hs::fock::ModeRegister reg({sym.symmetric, sym.antisymmetric});
  const auto state = hs::fock::apply_loss_channel(hs::fock::build_heralded_state(g1, g2, reg, 2), 0.76);
  return hs::fock::reduce_to_register_mode(state, 0);
}

void BM_TriggerMode(benchmark::State& state) {
  const auto grid = hs::modes::TimeGrid::from_window();
  for (auto _ : state) benchmark::DoNotOptimize(hs::modes::make_trigger_mode(250e-9, 53e6, grid));
}
BENCHMARK(BM_TriggerMode);

void BM_HeraldedStateAndLoss(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lossy_f1_state());
}
BENCHMARK(BM_HeraldedStateAndLoss);

void BM_QuadratureSampling(benchmark::State& state) {
  const auto rho = lossy_f1_state();
  for (auto _ : state) {
    benchmark::DoNotOptimize(hs::homodyne::sample_quadratures(rho, static_cast<std::size_t>(state.range(0)), 7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QuadratureSampling)->Arg(10'000)->Arg(100'000);

void BM_MlDiagonal(benchmark::State& state) {
  const auto samples = hs::homodyne::sample_quadratures(lossy_f1_state(), 100'000, 11);
  std::vector<double> xs;
  for (const auto& s : samples) xs.push_back(s.x);
  for (auto _ : state) benchmark::DoNotOptimize(hs::tomo::ml_diagonal(xs));
}
BENCHMARK(BM_MlDiagonal);

void BM_ThermalField(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(hs::clicks::synthesize_thermal_field(53e6, 1e-3, 0.25e-9, 3));
  }
}
BENCHMARK(BM_ThermalField)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
