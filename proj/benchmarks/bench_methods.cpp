#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "facepulse/rppg.hpp"

namespace {

fp::regions::RgbTrace window_trace() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 0.3);
  fp::regions::RgbTrace t;
  t.fs = 30.0;
  for (int i = 0; i < 300; ++i) {
    const double p = std::sin(2.0 * 3.14159265358979 * 1.2 * i / 30.0);
    t.r.push_back(150.0 + 0.33 * p + nd(rng));
    t.g.push_back(110.0 + 0.77 * p + nd(rng));
    t.b.push_back(90.0 + 0.53 * p + nd(rng));
  }
  return t;
}

void BM_Method(benchmark::State& st) {
  const auto m = fp::rppg::all_methods()[static_cast<std::size_t>(st.range(0))];
  if (fp::rppg::requires_pixels(m)) {
    st.SkipWithError("needs pixel moments");
    return;
  }
  const auto t = window_trace();
  st.SetLabel(std::string(fp::rppg::method_name(m)));
  for (auto _ : st) benchmark::DoNotOptimize(fp::rppg::apply(m, t));
}
BENCHMARK(BM_Method)->DenseRange(0, 9);

}  // namespace
