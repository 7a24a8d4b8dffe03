#include <benchmark/benchmark.h>

#include "facepulse/pipeline.hpp"
#include "facepulse/synth.hpp"

namespace {

// One 10 s window of video through the multi-region pipeline.
void BM_ExtractTenSeconds(benchmark::State& st) {
  fp::synth::SyntheticSpec spec;
  spec.duration_s = 10.0;
  const fp::synth::SyntheticVideo v(spec, 1);
  for (auto _ : st) benchmark::DoNotOptimize(fp::pipeline::run_extract(v, v.landmarks(), {}));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(v.size()));
}
BENCHMARK(BM_ExtractTenSeconds)->Unit(benchmark::kMillisecond);

// Method stage only, traces prebuilt.
void BM_FromTraces(benchmark::State& st) {
  fp::synth::SyntheticSpec spec;
  spec.duration_s = 30.0;
  const fp::synth::SyntheticVideo v(spec, 1);
  const fp::config::PipelineConfig cfg;
  const auto ts = fp::pipeline::build_traces(v, v.landmarks(), cfg);
  const auto plan = fp::pipeline::plan_selection(ts, cfg);
  for (auto _ : st) benchmark::DoNotOptimize(fp::pipeline::run_from_traces(ts, cfg, &plan));
}
BENCHMARK(BM_FromTraces)->Unit(benchmark::kMillisecond);

}  // namespace
