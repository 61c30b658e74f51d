#include <benchmark/benchmark.h>

#include "qfc/correlation.hpp"
#include "qfc/fitkit.hpp"
#include "qfc/phasematch.hpp"
#include "qfc/specfit.hpp"

using namespace qfc;

namespace {

G2Params params(double jitter) {
  G2Params p;
  p.rho = sbr_db_to_rho(7.5);
  p.jitter_fwhm_ps = jitter;
  return p;
}

void BM_g2_model(benchmark::State& state) {
  const auto p = params(static_cast<double>(state.range(0)));
  double t = -5000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(g2_model(t, p));
    t = t > 5000 ? -5000 : t + 7.3;
  }
}
BENCHMARK(BM_g2_model)->Arg(0)->Arg(550);

void BM_g2_bin_average(benchmark::State& state) {
  const auto p = params(550);
  for (auto _ : state) benchmark::DoNotOptimize(g2_bin_average(-150, -50, p));
}
BENCHMARK(BM_g2_bin_average);

void BM_simulate_hbt(benchmark::State& state) {
  HbtSimulation sim;
  sim.total_rate_cps = static_cast<double>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    sim.seed = seed++;
    benchmark::DoNotOptimize(simulate_hbt(params(550), sim).total());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_simulate_hbt)->Arg(1000000)->Arg(4000000)->Unit(benchmark::kMillisecond);

void BM_fit_g2(benchmark::State& state) {
  HbtSimulation sim;
  sim.total_rate_cps = 2e6;
  const auto h = simulate_hbt(params(550), sim);
  G2FitOptions o;
  o.profile_intervals = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fit_g2(h, 550, o).sbr_db);
}
BENCHMARK(BM_fit_g2)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_lm_rosenbrock(benchmark::State& state) {
  fit::FitProblem p;
  p.residuals = [](const fit::Vector& q) { return fit::Vector{{1.0 - q[0], 10.0 * (q[1] - q[0] * q[0])}}; };
  p.initial = fit::Vector{{-1.2, 1.0}};
  for (auto _ : state) benchmark::DoNotOptimize(fit::lm_fit(p).cost);
}
BENCHMARK(BM_lm_rosenbrock);

void BM_acceptance_bandwidth(benchmark::State& state) {
  const auto model = default_sellmeier();
  const auto stage = StageSpec::from_input_and_pump(Wavelength::from_nm(737.1), Wavelength::from_nm(2812.6));
  const QpmGrating g{qpm_period_for(stage, 30.0, model), 4.0, 30.0};
  for (auto _ : state) benchmark::DoNotOptimize(acceptance_bandwidth(stage, g, model).ghz());
}
BENCHMARK(BM_acceptance_bandwidth);

void BM_sbr_from_spectrum(benchmark::State& state) {
  SpectrumModel m;
  m.background = {100.0, 735.0, 6.0, 4};
  m.peaks = {{300.0, 736.0, 0.12}, {800.0, 736.5, 0.10}, {500.0, 737.0, 0.14}, {200.0, 737.6, 0.12}};
  for (auto _ : state) benchmark::DoNotOptimize(sbr_from_spectrum(m, 729.5, 740.5));
}
BENCHMARK(BM_sbr_from_spectrum);

}  // namespace

BENCHMARK_MAIN();
