#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "safe/device.hpp"
#include "safe/filter.hpp"
#include "safe/siggen.hpp"
#include "safe/sine_fit.hpp"
#include "safe/transport.hpp"

namespace {

void BM_Quantize(benchmark::State& state) {
  const auto spec = safe::DeviceSpec::safe();
  double v = -4000.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(safe::adc_quantize(v, spec));
    v = v > 4000.0 ? -4000.0 : v + 0.37;
  }
}
BENCHMARK(BM_Quantize);

void BM_Acquisition(benchmark::State& state) {
  const auto spec = safe::DeviceSpec::safe();
  const double duration = static_cast<double>(state.range(0));
  const auto src = safe::analytic_sinusoid(50, 20, duration);
  for (auto _ : state) benchmark::DoNotOptimize(safe::run_acquisition(src, spec, duration, 1));
  state.SetItemsProcessed(state.iterations() * safe::frame_count_for(duration, spec));
}
BENCHMARK(BM_Acquisition)->Arg(1)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_Filtfilt(benchmark::State& state) {
  const auto sos = safe::butterworth_highpass(6, 3.0, 1024.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 10);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (double& v : x) v = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(safe::filtfilt(sos, x, 1024));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Filtfilt)->Arg(1 << 12)->Arg(30 * 1024)->Unit(benchmark::kMicrosecond);

void BM_PhaseFit(benchmark::State& state) {
  const double f = static_cast<double>(state.range(0));
  const auto n = static_cast<std::size_t>(std::llround(1024 / f));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0, 9.4);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 50 * std::sin(2 * std::numbers::pi * f * i / 1024.0 + 0.4) + noise(rng);
  for (auto _ : state) benchmark::DoNotOptimize(safe::fit_sine_phase(x, 0.0, 50.0, f, 1024.0));
}
BENCHMARK(BM_PhaseFit)->Arg(10)->Arg(190);

void BM_Reassemble(benchmark::State& state) {
  const auto spec = safe::DeviceSpec::safe();
  const auto frames = safe::run_acquisition(safe::analytic_sinusoid(50, 20, 30), spec, 30.0, 1);
  const auto received = safe::transmit(safe::packetize(frames, spec), spec.loss_probability, 3);
  const auto total = static_cast<std::int64_t>(frames.size());
  for (auto _ : state) benchmark::DoNotOptimize(safe::reassemble(received, spec, total));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(received.size()));
}
BENCHMARK(BM_Reassemble)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
