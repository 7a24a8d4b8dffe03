#include <gtest/gtest.h>

#include <cmath>

#include "facepulse/config.hpp"
#include "facepulse/dsp.hpp"
#include "facepulse/error.hpp"
#include "facepulse/pipeline.hpp"
#include "facepulse/regions.hpp"
#include "facepulse/synth.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace fp;
using namespace fp::synth;

namespace {

// Mean green of a canonical grid cell, read from the unquantized render at
// the cell's source-space position.
std::vector<double> cell_green(const SyntheticVideo& v, int cell, std::size_t frames) {
  const auto box = regions::grid_partition(180, 180, v.spec().grid_n)[static_cast<std::size_t>(cell)];
  std::vector<double> out;
  for (std::size_t i = 0; i < frames; ++i) {
    const auto img = v.render(i);
    const auto p0 = v.to_source({double(box.x0), double(box.y0)}, i / v.fs());
    double acc = 0.0;
    int n = 0;
    for (int y = 4; y < box.height() - 4; ++y)
      for (int x = 4; x < box.width() - 4; ++x) {
        acc += img.at(static_cast<int>(p0.x) + x, static_cast<int>(p0.y) + y, 1);
        ++n;
      }
    out.push_back(acc / n);
  }
  return out;
}

}  // namespace

TEST(Synth, ReferencePeakAndInjectedTrace) {
  SyntheticSpec spec;
  spec.duration_s = 20.0;
  spec.noise_sigma = 0.0;
  const SyntheticVideo v(spec, 1);
  const auto& ref = v.reference();
  EXPECT_EQ(ref.fs, 60.0);
  EXPECT_EQ(ref.size(), 1200u);
  const auto psd = dsp::welch_psd(ref);
  std::size_t best = 0;
  for (std::size_t i = 0; i < psd.freqs.size(); ++i)
    if (psd.power[i] > psd.power[best]) best = i;
  EXPECT_NEAR(psd.freqs[best], 1.2, psd.bin_width());

  const auto g = cell_green(v, 48, v.size());
  std::vector<double> r;
  for (std::size_t i = 0; i < g.size(); ++i) r.push_back(ref.samples[2 * i]);
  EXPECT_GE(oracle::pearson(g, r), 0.99);
}

TEST(Synth, OnlyInjectedCellsPulse) {
  SyntheticSpec spec;
  spec.duration_s = 4.0;
  spec.noise_sigma = 0.0;
  spec.injected_regions = {48};
  const SyntheticVideo v(spec, 1);
  EXPECT_TRUE(v.injected()[48]);
  EXPECT_FALSE(v.injected()[50]);
  const auto other = cell_green(v, 50, v.size());
  EXPECT_NEAR(dsp::variance(other), 0.0, 1e-9);
  EXPECT_GT(dsp::variance(cell_green(v, 48, v.size())), 0.1);
}

TEST(Synth, Deterministic) {
  SyntheticSpec spec;
  spec.duration_s = 2.0;
  spec.vx = 1.0;
  spec.landmark_jitter = 1.0;
  spec.region_noise_sigma = 1.0;
  const SyntheticVideo a(spec, 9), b(spec, 9), c(spec, 10);
  for (std::size_t i : {0u, 17u, 59u}) {
    EXPECT_EQ(a.frame(i), b.frame(i));
    EXPECT_EQ(a.render(i), b.render(i));
  }
  EXPECT_NE(a.frame(3), c.frame(3));
  EXPECT_EQ(a.reference().samples, b.reference().samples);
  ASSERT_EQ(a.landmarks().size(), b.landmarks().size());
  for (std::size_t i = 0; i < a.landmarks().size(); ++i) EXPECT_EQ(a.landmarks()[i]->points, b.landmarks()[i]->points);
}

TEST(Synth, LandmarksFollowMotion) {
  SyntheticSpec spec;
  spec.duration_s = 3.0;
  spec.vx = 2.0;
  spec.vy = -1.0;
  const SyntheticVideo v(spec, 2);
  const auto a = source_landmarks(v, 0.0), b = source_landmarks(v, 2.0);
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    EXPECT_NEAR(b.points[k].x - a.points[k].x, 4.0, 1e-9);
    EXPECT_NEAR(b.points[k].y - a.points[k].y, -2.0, 1e-9);
  }
  // Without jitter the stored landmarks are the motion model itself.
  const auto& lm = *v.landmarks()[60];
  const auto exp = source_landmarks(v, 2.0);
  for (std::size_t k = 0; k < 68; ++k) EXPECT_NEAR(lm.points[k].x, exp.points[k].x, 1e-9);
}

TEST(Synth, HrTrajectory) {
  SyntheticSpec spec;
  spec.hr = {{0.0, 60.0}, {10.0, 120.0}};
  const SyntheticVideo v(spec, 1);
  EXPECT_EQ(v.bpm_at(5.0), 60.0);
  EXPECT_EQ(v.bpm_at(15.0), 120.0);
}

TEST(Synth, InvalidSpecs) {
  SyntheticSpec s;
  s.hr = {{0.0, 30.0}};
  EXPECT_THROW(SyntheticVideo(s, 1), Error);
  s = {};
  s.injected_regions = {81};
  EXPECT_THROW(SyntheticVideo(s, 1), Error);
  s = {};
  s.noise_sigma = -1.0;
  EXPECT_THROW(SyntheticVideo(s, 1), Error);
  s = {};
  EXPECT_THROW(SyntheticVideo(s, 1).frame(1800), Error);
}

TEST(Synth, SpecFileRoundTrip) {
  testing_support::TempDir tmp("synthfile");
  config::SynthFile f;
  f.seed = 77;
  f.spec.hr = {{0.0, 80.0}, {20.0, 100.0}};
  f.spec.injected_regions = {1, 2, 3};
  f.spec.vx = 1.5;
  config::save_synth(tmp / "v.json", f);
  const auto back = config::load_synth(tmp / "v.json");
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.spec.injected_regions, f.spec.injected_regions);
  ASSERT_EQ(back.spec.hr.size(), 2u);
  EXPECT_EQ(back.spec.hr[1].bpm, 100.0);
  EXPECT_EQ(back.spec.vx, 1.5);
  EXPECT_EQ(SyntheticVideo(back.spec, back.seed).frame(5), SyntheticVideo(f.spec, f.seed).frame(5));
}

TEST(Synth, NormalizationBeatsFixedCropUnderTranslation) {
  SyntheticSpec spec;
  spec.duration_s = 30.0;
  spec.vx = 1.0;
  const SyntheticVideo v(spec, 3);
  const auto snr_of = [&](config::Pipeline p) {
    config::PipelineConfig cfg;
    cfg.pipeline = p;
    cfg.region_mode = config::RegionMode::face;
    cfg.crop = config::Crop::fixed;
    const auto ts = pipeline::build_traces(v, v.landmarks(), cfg);
    return regions::compute_region_stats(ts.traces.at(0)).snr_db;
  };
  const double fixed = snr_of(config::Pipeline::improved);
  const double norm = snr_of(config::Pipeline::normalized_single);
  EXPECT_GE(norm - fixed, 6.0) << "normalized " << norm << " dB, fixed crop " << fixed << " dB";
}
