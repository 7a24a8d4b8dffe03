#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "facepulse/error.hpp"
#include "facepulse/regions.hpp"
#include "oracles.hpp"

using namespace fp;
using namespace fp::regions;

namespace {

std::vector<double> cosine(double f, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::cos(2.0 * std::numbers::pi * f * i / fs);
  return x;
}

RgbTrace trace_of(std::vector<double> g, double fs, int id = 0) {
  RgbTrace t;
  t.r = g;
  t.b = g;
  t.g = std::move(g);
  t.fs = fs;
  t.region_id = id;
  return t;
}

RegionStats good(int id, double energy = 1.0) {
  RegionStats s;
  s.region_id = id;
  s.variance = 1.0;
  s.kfd = 1.5;
  s.kfd_defined = true;
  s.dfa_alpha = 0.9;
  s.dfa_defined = true;
  s.psd_energy = energy;
  return s;
}

}  // namespace

TEST(Grid, ExactDivision) {
  const auto boxes = grid_partition(180, 180, 9);
  ASSERT_EQ(boxes.size(), 81u);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    EXPECT_EQ(boxes[i].id, static_cast<int>(i));
    EXPECT_EQ(boxes[i].width(), 20);
    EXPECT_EQ(boxes[i].height(), 20);
  }
  EXPECT_EQ(boxes[10].x0, 20);
  EXPECT_EQ(boxes[10].y0, 20);
}

TEST(Grid, RemainderGoesToFirstColumns) {
  const auto boxes = grid_partition(10, 10, 3);
  EXPECT_EQ(boxes[0].width(), 4);
  EXPECT_EQ(boxes[1].width(), 3);
  EXPECT_EQ(boxes[2].width(), 3);
  EXPECT_EQ(boxes[3].height(), 3);
}

TEST(Grid, TilesExactly) {
  for (int w : {7, 50, 180, 181})
    for (int h : {9, 64, 180})
      for (int n : {1, 3, 6, 9, 11}) {
        if (n > w || n > h) continue;
        const auto boxes = grid_partition(w, h, n);
        std::size_t area = 0;
        for (const auto& b : boxes) area += b.area();
        EXPECT_EQ(area, static_cast<std::size_t>(w) * h) << w << "x" << h << " n=" << n;
      }
}

TEST(Traces, UniformGrayIsConstant) {
  TraceAccumulator acc(grid_partition(180, 180, 9), 30.0);
  const ImageF gray(180, 180, 128.0f);
  for (int i = 0; i < 20; ++i) acc.push(gray);
  for (const auto& t : acc.traces())
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_EQ(t.r[i], 128.0);
      EXPECT_EQ(t.g[i], 128.0);
      EXPECT_EQ(t.b[i], 128.0);
    }
}

TEST(Traces, PaintedRegionFollowsSinusoid) {
  const auto boxes = grid_partition(180, 180, 9);
  TraceAccumulator acc(boxes, 30.0);
  const auto& box = boxes[40];
  std::vector<double> truth;
  for (int i = 0; i < 90; ++i) {
    ImageF f(180, 180, 128.0f);
    const double v = 128.0 + 10.0 * std::sin(2.0 * std::numbers::pi * 1.2 * i / 30.0);
    truth.push_back(v);
    for (int y = box.y0; y < box.y1; ++y)
      for (int x = box.x0; x < box.x1; ++x) f.at(x, y, 1) = static_cast<float>(std::round(v));
    acc.push(f);
  }
  const auto& g = acc.traces()[40].g;
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], truth[i], 0.5);
  EXPECT_EQ(acc.traces()[39].g.front(), 128.0);
}

TEST(Traces, OutsideMeshBoxIsZero) {
  TraceAccumulator acc(grid_partition(180, 180, 9), 30.0);
  ImageF f(180, 180, 0.0f);
  for (int i = 0; i < 5; ++i) acc.push(f);
  for (double v : acc.traces()[0].g) EXPECT_EQ(v, 0.0);
}

TEST(Traces, SliceKeepsIdentity) {
  auto t = trace_of(cosine(1.0, 30.0, 100), 30.0, 7);
  const auto s = t.slice(10, 20);
  EXPECT_EQ(s.size(), 20u);
  EXPECT_EQ(s.region_id, 7);
  EXPECT_EQ(s.g.front(), t.g[10]);
}

TEST(Katz, LineIsOne) {
  std::vector<double> ramp(10);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  EXPECT_NEAR(katz_fd(ramp), 1.0, 1e-9);
  std::vector<double> steep{3, 1, -1, -3, -5, -7};
  EXPECT_NEAR(katz_fd(steep), 1.0, 1e-9);
}

TEST(Katz, ConstantUndefined) {
  const std::vector<double> c(16, 2.5);
  try {
    katz_fd(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::undefined_kfd);
  }
}

TEST(Katz, AlternatingMatchesDefinition) {
  const std::vector<double> x{0, 1, 0, 1, 0, 1, 0, 1};
  EXPECT_NEAR(katz_fd(x), oracle::katz(x), 1e-12);
}

TEST(Katz, RandomSeriesMatchDefinition) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = oracle::gaussian(200, seed);
    EXPECT_NEAR(katz_fd(x), oracle::katz(x), 1e-10);
  }
}

TEST(Dfa, WhiteNoiseNearHalf) {
  int inside = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double a = dfa_alpha(oracle::gaussian(2048, seed));
    inside += (a >= 0.4 && a <= 0.6);
  }
  EXPECT_GE(inside, 18);
}

TEST(Dfa, RandomWalkNearOneAndHalf) {
  int inside = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto x = oracle::gaussian(2048, seed);
    std::partial_sum(x.begin(), x.end(), x.begin());
    const double a = dfa_alpha(x);
    inside += (a >= 1.3 && a <= 1.7);
  }
  EXPECT_GE(inside, 18);
}

TEST(Dfa, TooShort) { EXPECT_THROW(dfa_alpha(std::vector<double>(63, 1.0)), Error); }

TEST(Dfa, Classes) {
  EXPECT_EQ(classify_dfa(0.3), DfaClass::anti_correlated);
  EXPECT_EQ(classify_dfa(0.45), DfaClass::uncorrelated);
  EXPECT_EQ(classify_dfa(0.55), DfaClass::uncorrelated);
  EXPECT_EQ(classify_dfa(0.8), DfaClass::correlated);
  EXPECT_EQ(classify_dfa(1.0), DfaClass::correlated);
  EXPECT_EQ(classify_dfa(1.2), DfaClass::non_stationary);
}

TEST(SampleEntropy, MatchesExhaustiveCount) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto x = oracle::gaussian(150, seed);
    const double r = 0.2 * fp::dsp::stddev(x);
    EXPECT_NEAR(sample_entropy(x, 2, r), oracle::sample_entropy(x, 2, r), 1e-12);
  }
}

TEST(SampleEntropy, NoiseMoreIrregularThanSine) {
  const auto white = oracle::gaussian(300, 21);
  auto sine = cosine(1.2, 30.0, 300);
  const auto small = oracle::gaussian(300, 22);
  for (std::size_t i = 0; i < sine.size(); ++i) sine[i] += 0.05 * small[i];
  const double ew = oracle::sample_entropy(white, 2, 0.2 * fp::dsp::stddev(white));
  const double es = oracle::sample_entropy(sine, 2, 0.2 * fp::dsp::stddev(sine));
  EXPECT_GT(ew, es);
  EXPECT_GT(sample_entropy(white), sample_entropy(sine));
}

TEST(ZeroCrossings, FullPeriods) {
  for (int k : {3, 7, 12}) EXPECT_EQ(zero_crossings(cosine(1.2, 30.0, static_cast<std::size_t>(k * 25))), 2u * k);
}

TEST(RegionStats, InBandSine) {
  const auto st = compute_region_stats(trace_of(cosine(1.2, 30.0, 300, 2.0), 30.0));
  EXPECT_GE(st.snr_db, 20.0);
  EXPECT_TRUE(st.kfd_defined);
  EXPECT_TRUE(st.dfa_defined);
  EXPECT_GT(st.psd_energy, 0.0);
  EXPECT_NEAR(st.variance, 2.0, 1e-9);
}

TEST(RegionStats, ConstantTrace) {
  const auto st = compute_region_stats(trace_of(std::vector<double>(300, 90.0), 30.0));
  EXPECT_EQ(st.variance, 0.0);
  EXPECT_FALSE(st.kfd_defined);
  EXPECT_NEAR(st.psd_energy, 0.0, 1e-12);
}

TEST(Selection, ZeroVarianceDropped) {
  std::vector<RegionStats> stats;
  for (int i = 0; i < 81; ++i) {
    auto s = good(i, 1.0 + i);
    if (i % 2 == 0 && i < 80) s.variance = 0.0;
    stats.push_back(s);
  }
  SelectionConfig cfg;
  cfg.max_regions = 81;
  const auto sel = select_regions(stats, cfg);
  EXPECT_LE(sel.ids.size(), 41u);
  for (int id : sel.ids) EXPECT_GT(stats[static_cast<std::size_t>(id)].variance, 0.0);
}

TEST(Selection, TieBreakLowestIds) {
  std::vector<RegionStats> stats;
  for (int i = 0; i < 81; ++i) stats.push_back(good(i));
  const auto sel = select_regions(stats, {});
  ASSERT_EQ(sel.ids.size(), 32u);
  for (int i = 0; i < 32; ++i) EXPECT_EQ(sel.ids[static_cast<std::size_t>(i)], i);
  EXPECT_FALSE(sel.fallback);
}

TEST(Selection, KfdAndDfaScreens) {
  std::vector<RegionStats> stats{good(0, 5.0), good(1, 4.0), good(2, 3.0), good(3, 2.0)};
  stats[1].kfd = 1.0;        // 1.0 / 1.5 < 0.85 of the maximum
  stats[2].dfa_alpha = 0.5;  // uncorrelated
  stats[3].dfa_alpha = 1.0;  // upper bound is inclusive
  const auto sel = select_regions(stats, {});
  EXPECT_EQ(sel.ids, (std::vector<int>{0, 3}));

  SelectionConfig abs;
  abs.kfd_mode = KfdMode::absolute;
  abs.kfd_threshold = 1.2;
  EXPECT_EQ(select_regions(stats, abs).ids, (std::vector<int>{0, 3}));
}

TEST(Selection, EnergyRanking) {
  std::vector<RegionStats> stats;
  for (int i = 0; i < 10; ++i) stats.push_back(good(i, static_cast<double>(i)));
  SelectionConfig cfg;
  cfg.max_regions = 3;
  EXPECT_EQ(select_regions(stats, cfg).ids, (std::vector<int>{7, 8, 9}));
}

TEST(Selection, FallbackToStrongest) {
  std::vector<RegionStats> stats{good(0, 1.0), good(1, 9.0)};
  for (auto& s : stats) s.dfa_alpha = 0.5;
  const auto sel = select_regions(stats, {});
  EXPECT_TRUE(sel.fallback);
  EXPECT_EQ(sel.ids, std::vector<int>{1});
}

TEST(Aggregate, IdenticalSignals) {
  const dsp::Signal1D s{cosine(1.2, 30.0, 300, 3.0), 30.0};
  const std::vector<dsp::Signal1D> sig{s, s};
  const std::vector<int> ids{0, 1};
  const auto a = aggregate_regions(sig, ids);
  EXPECT_FALSE(a.flat);
  EXPECT_NEAR(dsp::variance(a.signal.samples), 1.0, 1e-12);
  EXPECT_NEAR(oracle::pearson(a.signal.samples, s.samples), 1.0, 1e-12);
}

TEST(Aggregate, CancellationIsFlat) {
  dsp::Signal1D s{cosine(1.2, 30.0, 300), 30.0};
  dsp::Signal1D neg = s;
  for (double& v : neg.samples) v = -v;
  const std::vector<dsp::Signal1D> sig{s, neg};
  const std::vector<int> ids{0, 1};
  const auto a = aggregate_regions(sig, ids);
  EXPECT_TRUE(a.flat);
  for (double v : a.signal.samples) EXPECT_EQ(v, 0.0);
}

TEST(Aggregate, SnrGainOverCopies) {
  const auto clean = cosine(1.2, 30.0, 600);
  std::vector<dsp::Signal1D> sig;
  std::vector<int> ids;
  for (int k = 0; k < 32; ++k) {
    auto n = oracle::gaussian(600, 100 + k);
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = clean[i] + n[i] * std::sqrt(0.5);  // 0 dB
    sig.push_back({n, 30.0});
    ids.push_back(k);
  }
  const auto snr = [&](const std::vector<double>& x) {
    const double p = oracle::tone_power(x, 30.0, 1.2);
    return 10.0 * std::log10(p / (dsp::variance(x) - p));
  };
  const auto a = aggregate_regions(sig, ids);
  EXPECT_GE(snr(a.signal.samples) - snr(sig[0].samples), 10.0);
}

TEST(Patches, ModesAndGeometry) {
  const auto lm = facegeom::CanonicalMesh::builtin().canonical_landmarks();
  EXPECT_EQ(fixed_patches(lm, PatchMode::combined).size(), 3u);
  EXPECT_EQ(fixed_patches(lm, PatchMode::cheeks).size(), 2u);
  const auto fh = fixed_patches(lm, PatchMode::forehead);
  ASSERT_EQ(fh.size(), 1u);
  double brow = 1e9;
  for (std::size_t i = 17; i <= 26; ++i) brow = std::min(brow, lm.points[i].y);
  EXPECT_LT(fh[0].y1, brow);
  EXPECT_GT(fh[0].area(), 0u);
  for (const auto& b : fixed_patches(lm, PatchMode::combined)) {
    EXPECT_GT(b.area(), 0u);
    EXPECT_TRUE(facegeom::CanonicalMesh::builtin().covers((b.x0 + b.x1) / 2, (b.y0 + b.y1) / 2));
  }
  EXPECT_EQ(parse_patch_mode("combined"), PatchMode::combined);
  EXPECT_THROW(parse_patch_mode("chin"), Error);
}

TEST(Patches, FaceBoxCoversMesh) {
  const auto& m = facegeom::CanonicalMesh::builtin();
  const auto box = face_box(m.canonical_landmarks());
  for (const auto& p : m.vertices()) {
    EXPECT_GE(p.x, box.x0);
    EXPECT_LT(p.x, box.x1);
    EXPECT_GE(p.y, box.y0);
    EXPECT_LT(p.y, box.y1);
  }
}

TEST(StatsCsv, Rows) {
  std::ostringstream os;
  write_stats_header(os);
  const std::vector<RegionStats> stats{good(0), good(1)};
  const std::vector<int> sel{1};
  write_stats_rows(os, 3.0, stats, sel);
  const auto text = os.str();
  EXPECT_NE(text.find("window_start,region_id"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
