#include <benchmark/benchmark.h>

#include <cmath>

#include "hjlab/effective.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/lax_oleinik.hpp"
#include "hjlab/parallel.hpp"

using namespace hjlab;

namespace {

HamiltonianModel pendulum() {
  return HamiltonianModel::mechanical(1, [](std::span<const double> x) { return std::cos(kTwoPi * x[0]); });
}

const LagrangianTable& table() {
  static const LagrangianTable t = legendre_dual(pendulum(), 64, 28.0, 561, PSearch{40.0, 801, 1e-9});
  return t;
}

}  // namespace

static void BM_LegendreDual(benchmark::State& state) {
  const auto m = pendulum();
  for (auto _ : state) {
    auto t = legendre_dual(m, static_cast<int>(state.range(0)), 28.0, 561, PSearch{40.0, 801, 1e-9});
    benchmark::DoNotOptimize(t.L(0, 0));
  }
}
BENCHMARK(BM_LegendreDual)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_LaxStep(benchmark::State& state) {
  set_thread_count(static_cast<int>(state.range(1)));
  const auto c = derive_constants(pendulum(), table(), 1.0);
  const int cr = static_cast<int>(state.range(0));
  const auto cfg = make_step_config(c, 0.125, cr, 0.125 / 16);
  const LaxOperator op(cfg, table(), cr, 1);
  const auto u = sample_field(0.125, cr, IndexBox{{-32 * cr}, {32 * cr}}, 32 * 0.125,
                              [](std::span<const double> y) { return std::cos(y[0]); });
  for (auto _ : state) {
    auto v = op.step(u);
    benchmark::DoNotOptimize(v.values.data());
  }
  state.SetItemsProcessed(state.iterations() * u.size());
  set_thread_count(1);
}
BENCHMARK(BM_LaxStep)->Args({64, 1})->Args({64, 4})->Args({256, 1})->Unit(benchmark::kMillisecond);

static void BM_EffectiveLongtime(benchmark::State& state) {
  const auto forms = coordinate_forms(1);
  LongtimeConfig lc;
  lc.cell_res = static_cast<int>(state.range(0));
  lc.T = 10.0;
  const double P = 1.5;
  for (auto _ : state) benchmark::DoNotOptimize(effective_longtime(pendulum(), table(), {&P, 1}, forms, lc).hbar);
}
BENCHMARK(BM_EffectiveLongtime)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
