#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "facepulse/dsp.hpp"
#include "facepulse/error.hpp"
#include "oracles.hpp"

using namespace fp;
using namespace fp::dsp;

namespace {

Signal1D tone(double f, double fs, double seconds, double amp = 1.0) {
  Signal1D s{{}, fs};
  const auto n = static_cast<std::size_t>(std::lround(seconds * fs));
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(amp * std::sin(2.0 * std::numbers::pi * f * i / fs));
  return s;
}

double central_rms(const std::vector<double>& x, double fs, double seconds) {
  const auto half = static_cast<std::size_t>(seconds * fs / 2);
  const std::size_t mid = x.size() / 2;
  double acc = 0.0;
  for (std::size_t i = mid - half; i < mid + half; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / (2 * half));
}

double db(double ratio) { return 20.0 * std::log10(ratio); }

}  // namespace

TEST(Detrend, RampVanishes) {
  Signal1D s{{}, 30.0};
  for (int i = 0; i < 300; ++i) s.samples.push_back(0.37 * i - 12.0);
  for (double v : detrend(s).samples) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Detrend, ConstantVanishes) {
  Signal1D s{std::vector<double>(100, 4.25), 30.0};
  for (double v : detrend(s).samples) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Detrend, RampPlusSineMatchesLeastSquares) {
  auto s = tone(1.0, 30.0, 10.0);
  for (std::size_t i = 0; i < s.size(); ++i) s.samples[i] += 0.05 * i + 3.0;
  const auto expected = oracle::line_residual(s.samples);
  const auto got = detrend(s).samples;
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-9);
}

TEST(Detrend, SmoothnessPriorsKeepsPulseRemovesDrift) {
  auto s = tone(1.2, 30.0, 20.0);
  for (std::size_t i = 0; i < s.size(); ++i) s.samples[i] += 5.0 * std::sin(2.0 * std::numbers::pi * 0.02 * i / 30.0);
  const auto out = detrend(s, SmoothnessPriors{300.0});
  EXPECT_NEAR(oracle::tone_power(out.samples, 30.0, 1.2), 0.5, 0.05);
  EXPECT_LT(oracle::tone_power(out.samples, 30.0, 0.02), 0.05);
}

TEST(Detrend, RejectsBadInput) {
  EXPECT_THROW(detrend(Signal1D{{1.0, 2.0}, 30.0}), Error);
  EXPECT_THROW(detrend(Signal1D{{1.0, NAN, 3.0, 4.0}, 30.0}), Error);
  EXPECT_THROW(detrend(Signal1D{{1.0, 2.0, 3.0}, 0.0}), Error);
}

TEST(Bandpass, ForRateScalesTaps) {
  EXPECT_EQ(BandpassSpec::for_rate(30.0).num_taps, 127);
  EXPECT_EQ(BandpassSpec::for_rate(60.0).num_taps % 2, 1);
  EXPECT_EQ(BandpassSpec::for_rate(25.0).num_taps, 105);
}

TEST(Bandpass, UnitGainAtBandCenter) {
  const BandpassSpec spec{};
  const auto taps = design_bandpass(spec, 30.0);
  EXPECT_NEAR(oracle::fir_magnitude(taps, (spec.low_hz + spec.high_hz) / 2, 30.0), 1.0, 1e-9);
}

TEST(Bandpass, DcIsRemoved) {
  Signal1D s{std::vector<double>(600, 5.0), 30.0};
  const auto out = bandpass_fir(s, {});
  for (std::size_t i = 150; i < 450; ++i) EXPECT_LE(std::abs(out.samples[i]), 1e-6);
}

TEST(Bandpass, PassbandGainMatchesResponse) {
  const BandpassSpec spec{};
  const auto s = tone(1.5, 30.0, 20.0);
  const auto out = bandpass_fir(s, spec);
  const double gain = db(central_rms(out.samples, 30.0, 10.0) / central_rms(s.samples, 30.0, 10.0));
  const double h = oracle::fir_magnitude(design_bandpass(spec, 30.0), 1.5, 30.0);
  EXPECT_NEAR(gain, 0.0, 0.5);
  EXPECT_NEAR(gain, db(h * h), 0.05);  // forward-backward squares the magnitude
}

TEST(Bandpass, StopbandAttenuation) {
  const BandpassSpec spec{};
  const auto s = tone(0.2, 30.0, 20.0);
  const auto out = bandpass_fir(s, spec);
  const double gain = db(central_rms(out.samples, 30.0, 10.0) / central_rms(s.samples, 30.0, 10.0));
  EXPECT_LE(gain, -40.0);
  const double h = oracle::fir_magnitude(design_bandpass(spec, 30.0), 0.2, 30.0);
  EXPECT_LE(db(h * h), -40.0);
}

TEST(Bandpass, InvalidBandRejected) {
  BandpassSpec spec{};
  spec.high_hz = 16.0;
  try {
    design_bandpass(spec, 30.0);
    FAIL() << "expected invalid band";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_band);
  }
  spec = {};
  spec.num_taps = 128;
  EXPECT_THROW(design_bandpass(spec, 30.0), Error);
}

TEST(Condition, KeepsMeanLevel) {
  auto s = tone(1.2, 30.0, 20.0);
  for (double& v : s.samples) v += 100.0;
  const auto out = condition(s.samples, 30.0, {}, true, true);
  const auto zm = condition(s.samples, 30.0, {}, true, false);
  ASSERT_EQ(out.size(), zm.size());
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i] - zm[i], 100.0, 1e-9);
  EXPECT_NEAR(mean(zm), 0.0, 1e-3);  // edge transients leave a small residual
}

TEST(MovingAverage, WidthOneIsIdentity) {
  const auto s = tone(1.0, 30.0, 2.0);
  EXPECT_EQ(moving_average(s, 1).samples, s.samples);
}

TEST(MovingAverage, ConstantStaysConstant) {
  Signal1D s{std::vector<double>(50, 0.1), 30.0};
  for (std::size_t w : {1u, 2u, 5u, 50u})
    for (double v : moving_average(s, w).samples) EXPECT_EQ(v, 0.1);
}

TEST(MovingAverage, HandExample) {
  Signal1D s{{1, 2, 3, 4, 5}, 1.0};
  const auto got = moving_average(s, 3).samples;
  const auto expected = oracle::window_mean(s.samples, 3);
  ASSERT_EQ(got.size(), 5u);
  const double hand[] = {1.5, 2, 3, 4, 4.5};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(got[i], hand[i]);
    EXPECT_DOUBLE_EQ(got[i], expected[i]);
  }
}

TEST(MovingAverage, EvenWidthMatchesOracle) {
  const auto x = oracle::gaussian(40, 3);
  const auto got = moving_average(Signal1D{x, 1.0}, 4).samples;
  const auto expected = oracle::window_mean(x, 4);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);
}

TEST(Windows, Counts) {
  EXPECT_EQ(window_grid(1800, 30.0, 10.0, 1.0).count(), 51u);
  EXPECT_EQ(window_grid(300, 30.0, 10.0, 1.0).count(), 1u);
  EXPECT_EQ(window_grid(285, 30.0, 10.0, 1.0).count(), 0u);
  const auto w = sliding_windows(tone(1.0, 30.0, 60.0), 10.0, 1.0);
  ASSERT_EQ(w.size(), 51u);
  EXPECT_DOUBLE_EQ(w[3].start_s, 3.0);
  EXPECT_EQ(w[3].signal.size(), 300u);
}

TEST(Welch, SingleTonePeak) {
  const auto s = tone(1.2, 30.0, 10.0);
  const auto p = welch_psd(s);
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.power.size(); ++i)
    if (p.power[i] > p.power[best]) best = i;
  EXPECT_NEAR(p.freqs[best], 1.2, p.bin_width());
}

TEST(Welch, DefaultSegmentAndFft) {
  const auto p = welch_psd(tone(1.0, 30.0, 10.0));
  EXPECT_EQ(p.freqs.size(), 1024u / 2 + 1);
  EXPECT_NEAR(p.bin_width(), 30.0 / 1024, 1e-12);
}

TEST(Welch, WhiteNoiseIsFlat) {
  // Averaged over log-spaced bands and 20 seeded runs.
  std::vector<double> acc;
  std::vector<double> edges;
  for (int k = 0; k <= 8; ++k) edges.push_back(0.5 * std::pow(12.0 / 0.5, k / 8.0));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Signal1D s{oracle::gaussian(3000, seed), 30.0};
    const auto p = welch_psd(s);
    if (acc.empty()) acc.assign(edges.size() - 1, 0.0);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      double sum = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < p.freqs.size(); ++i)
        if (p.freqs[i] >= edges[b] && p.freqs[i] < edges[b + 1]) sum += p.power[i], ++n;
      acc[b] += sum / n;
    }
  }
  const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
  EXPECT_LT(*hi / *lo, 3.0);
}

TEST(Welch, AmplitudeSquaredRatio) {
  auto s = tone(1.0, 30.0, 20.0, 2.0);
  const auto t2 = tone(2.0, 30.0, 20.0, 1.0);
  for (std::size_t i = 0; i < s.size(); ++i) s.samples[i] += t2.samples[i];
  const auto p = welch_psd(s);
  const double ratio = band_power(p, 0.9, 1.1) / band_power(p, 1.9, 2.1);
  EXPECT_NEAR(ratio, 4.0, 0.8);
}

TEST(Welch, ParsevalForWhiteNoise) {
  const Signal1D s{oracle::gaussian(4096, 9), 30.0};
  const auto p = welch_psd(s);
  EXPECT_NEAR(band_power(p, 0.0, 15.0), variance(s.samples), 0.1);
}

TEST(Stats, Basics) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(mean(x), 2.5);
  EXPECT_DOUBLE_EQ(variance(x), 1.25);
  EXPECT_EQ(next_pow2(1000), 1024u);
  EXPECT_EQ(next_pow2(1024), 1024u);
}
