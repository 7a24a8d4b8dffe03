#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "facepulse/dsp.hpp"
#include "facepulse/spectral.hpp"

namespace {

fp::dsp::Signal1D noisy_tone(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  fp::dsp::Signal1D s{{}, 30.0};
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(std::sin(0.3 * static_cast<double>(i)) + 0.5 * nd(rng));
  return s;
}

void BM_BandpassFiltfilt(benchmark::State& st) {
  const auto s = noisy_tone(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(fp::dsp::bandpass_fir(s, {}));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_BandpassFiltfilt)->Arg(300)->Arg(1800);

void BM_WelchWindow(benchmark::State& st) {
  const auto s = noisy_tone(300);
  for (auto _ : st) benchmark::DoNotOptimize(fp::dsp::welch_psd(s));
}
BENCHMARK(BM_WelchWindow);

void BM_HrSeries60s(benchmark::State& st) {
  const auto s = noisy_tone(1800);
  for (auto _ : st) benchmark::DoNotOptimize(fp::spectral::hr_series(s));
}
BENCHMARK(BM_HrSeries60s);

}  // namespace
