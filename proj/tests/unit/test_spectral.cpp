#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "facepulse/error.hpp"
#include "facepulse/spectral.hpp"
#include "oracles.hpp"

using namespace fp;
using namespace fp::spectral;

namespace {

std::vector<double> sine(double f, double fs, double seconds, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(static_cast<std::size_t>(std::lround(seconds * fs)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f * i / fs + phase);
  return x;
}

// Phase-continuous two-segment tone: f0 before t_switch, f1 after.
std::vector<double> two_segment(double f0, double f1, double t_switch, double fs, double seconds) {
  std::vector<double> x(static_cast<std::size_t>(seconds * fs));
  double ph = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::sin(ph);
    ph += 2.0 * std::numbers::pi * (i / fs < t_switch ? f0 : f1) / fs;
  }
  return x;
}

}  // namespace

TEST(EstimateHr, SingleTone) {
  const auto hr = estimate_hr(sine(1.2, 30.0, 10.0), 30.0);
  ASSERT_TRUE(hr);
  EXPECT_NEAR(*hr, 72.0, 0.5);
}

TEST(EstimateHr, OutOfBandIsInvalid) { EXPECT_FALSE(estimate_hr(sine(0.5, 30.0, 10.0), 30.0)); }

TEST(EstimateHr, FlatIsInvalid) { EXPECT_FALSE(estimate_hr(std::vector<double>(300, 3.0), 30.0)); }

TEST(EstimateHr, DominantInBandPeak) {
  auto x = sine(1.2, 30.0, 10.0);
  const auto h = sine(2.8, 30.0, 10.0, 0.5);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += h[i];
  const auto hr = estimate_hr(x, 30.0);
  ASSERT_TRUE(hr);
  EXPECT_NEAR(*hr, 72.0, 0.5);
}

TEST(EstimateHr, ToneSweep) {
  for (double bpm = 48.0; bpm <= 180.0; bpm += 20.0) {
    for (double phase : {0.0, 1.0, 2.5}) {
      const auto hr = estimate_hr(sine(bpm / 60.0, 30.0, 10.0, 1.0, phase), 30.0);
      ASSERT_TRUE(hr) << bpm;
      EXPECT_NEAR(*hr, bpm, 0.5) << bpm << " phase " << phase;
    }
  }
}

TEST(HrSeries, ConstantTone) {
  const auto s = hr_series({sine(1.2, 30.0, 60.0), 30.0});
  ASSERT_EQ(s.size(), 51u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_TRUE(s.valid[i]);
    EXPECT_NEAR(s.bpm[i], 72.0, 0.5);
    EXPECT_DOUBLE_EQ(s.times[i], static_cast<double>(i));
  }
  EXPECT_DOUBLE_EQ(s.step(), 1.0);
}

TEST(HrSeries, StepTransitionsMonotonically) {
  const auto s = hr_series({two_segment(1.2, 1.6, 30.0, 30.0, 60.0), 30.0});
  ASSERT_EQ(s.size(), 51u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.times[i] + 10.0 <= 30.0) {
      EXPECT_NEAR(s.bpm[i], 72.0, 0.5);
    }
    if (s.times[i] >= 30.0) {
      EXPECT_NEAR(s.bpm[i], 96.0, 0.5);
    }
    if (i > 0) {
      EXPECT_GE(s.bpm[i], s.bpm[i - 1] - 0.5);
    }
  }
}

TEST(HrSeries, TooShortIsEmpty) {
  try {
    hr_series({sine(1.2, 30.0, 8.0), 30.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_series);
  }
}

TEST(HrSeries, SampleValidityInvalidatesWindows) {
  std::vector<bool> valid(1800, true);
  for (std::size_t i = 600; i < 700; ++i) valid[i] = false;  // 3.3 s gap at t = 20 s
  const auto s = hr_series({sine(1.2, 30.0, 60.0), 30.0}, {}, valid);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double lo = s.times[i], hi = lo + 10.0;
    const double overlap = std::max(0.0, std::min(hi, 700.0 / 30.0) - std::max(lo, 20.0));
    EXPECT_EQ(s.valid[i], overlap <= 2.0) << s.times[i];
  }
}

TEST(HoldFill, PreviousAndLeading) {
  HrSeries s{{0, 1, 2, 3}, {0, 70, 0, 74}, {false, true, false, true}};
  hold_fill(s);
  EXPECT_EQ(s.bpm, (std::vector<double>{70, 70, 70, 74}));
  EXPECT_EQ(s.valid, (std::vector<bool>{false, true, false, true}));
}

TEST(Reference, BvpMatchesExtractedPath) {
  const dsp::Signal1D s{sine(1.3, 30.0, 40.0), 30.0};
  EXPECT_EQ(reference_hr(s, ReferenceKind::bvp, {}, 30.0), hr_series(s));
}

TEST(Reference, ResampledOntoVideoGrid) {
  const dsp::Signal1D ref60{sine(1.3, 60.0, 40.0), 60.0};
  const dsp::Signal1D vid30{sine(1.3, 30.0, 40.0), 30.0};
  const auto a = reference_hr(ref60, ReferenceKind::bvp, {}, 30.0);
  const auto b = hr_series(vid30);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_DOUBLE_EQ(a.times[i], b.times[i]);
    EXPECT_NEAR(a.bpm[i], b.bpm[i], 0.1);
  }
}

TEST(Reference, EcgRrIntervals) {
  const double fs = 250.0;
  std::vector<double> ecg(static_cast<std::size_t>(60 * fs));
  for (std::size_t i = 0; i < ecg.size(); ++i) {
    const double t = i / fs;
    const double ph = std::fmod(t + 0.4, 0.8) - 0.4;
    ecg[i] = std::exp(-ph * ph / (2 * 0.01 * 0.01)) + 0.15 * std::exp(-std::pow(ph + 0.2, 2) / (2 * 0.04 * 0.04)) +
             0.05 * std::sin(2.0 * std::numbers::pi * 0.2 * t);
  }
  const dsp::Signal1D sig{ecg, fs};
  const auto peaks = detect_r_peaks(sig);
  EXPECT_NEAR(static_cast<double>(peaks.size()), 75.0, 1.0);
  const auto s = reference_hr(sig, ReferenceKind::ecg);
  ASSERT_EQ(s.size(), 51u);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s.bpm[i], 75.0, 0.5);
}

TEST(Gaps, CleanSineAllValid) {
  const auto m = mask_reference_gaps({sine(1.2, 60.0, 20.0), 60.0});
  EXPECT_EQ(std::count(m.begin(), m.end(), false), 0);
}

TEST(Gaps, LongHoldInvalid) {
  auto x = sine(1.2, 60.0, 30.0);
  for (std::size_t i = 600; i < 720; ++i) x[i] = x[600];  // 2 s hold
  const auto m = mask_reference_gaps({x, 60.0});
  for (std::size_t i = 602; i < 718; ++i) EXPECT_FALSE(m[i]) << i;
  EXPECT_TRUE(m[500]);
  EXPECT_TRUE(m[800]);

  const auto s = reference_hr({x, 60.0}, ReferenceKind::bvp, {}, 30.0);
  bool some_invalid = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double overlap = std::max(0.0, std::min(s.times[i] + 10.0, 12.0) - std::max(s.times[i], 10.0));
    if (overlap > 2.0) {
      EXPECT_FALSE(s.valid[i]);
    }
    if (!s.valid[i]) some_invalid = true;
  }
  EXPECT_FALSE(some_invalid) << "a 2 s hold covers at most 20% of a 10 s window";
}

TEST(Gaps, LongerHoldInvalidatesWindows) {
  auto x = sine(1.2, 60.0, 30.0);
  for (std::size_t i = 600; i < 780; ++i) x[i] = x[600];  // 3 s hold
  const auto s = reference_hr({x, 60.0}, ReferenceKind::bvp, {}, 30.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double overlap = std::max(0.0, std::min(s.times[i] + 10.0, 13.0) - std::max(s.times[i], 10.0));
    if (overlap > 2.05) {
      EXPECT_FALSE(s.valid[i]) << s.times[i];
    }
    if (overlap < 1.9) {
      EXPECT_TRUE(s.valid[i]) << s.times[i];
    }
  }
}

TEST(Gaps, ShortHoldStaysValid) {
  auto x = sine(1.2, 60.0, 20.0);
  for (std::size_t i = 300; i < 318; ++i) x[i] = x[300];  // 0.3 s
  const auto m = mask_reference_gaps({x, 60.0});
  EXPECT_EQ(std::count(m.begin(), m.end(), false), 0);
}

TEST(Resample, LinearOnSine) {
  const dsp::Signal1D s{sine(0.5, 60.0, 10.0), 60.0};
  const auto r = resample_linear(s, 30.0);
  EXPECT_EQ(r.fs, 30.0);
  ASSERT_EQ(r.size(), 300u);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(r.samples[i], s.samples[2 * i], 1e-12);
}
