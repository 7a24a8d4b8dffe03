#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace fp::dsp {

/// Uniformly sampled real signal.
struct Signal1D {
  std::vector<double> samples;
  double fs = 0.0;

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const noexcept { return fs > 0.0 ? samples.size() / fs : 0.0; }
};

/// One-sided power spectral density on an ascending frequency grid.
struct Spectrum {
  std::vector<double> freqs;
  std::vector<double> power;

  double bin_width() const noexcept { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

/// Kaiser-windowed FIR band-pass design parameters.
struct BandpassSpec {
  double low_hz = 0.75;
  double high_hz = 4.0;
  double beta = 25.0;
  int num_taps = 127;

  /// Defaults scaled to a sampling rate: round(4.2 * fs), forced odd.
  static BandpassSpec for_rate(double fs, double low_hz = 0.75, double high_hz = 4.0,
                               double beta = 25.0);
};

struct LinearDetrend {};
struct SmoothnessPriors {
  double lambda = 300.0;
};
using DetrendMethod = std::variant<LinearDetrend, SmoothnessPriors>;

/// Throws fp::Error(invalid_input) on empty/NaN data or non-positive fs.
void validate(const Signal1D& signal);

Signal1D detrend(const Signal1D& signal, const DetrendMethod& method = LinearDetrend{});
std::vector<double> detrend_linear(std::span<const double> x);

/// Windowed-sinc band-pass taps, unit gain at the band center.
std::vector<double> design_bandpass(const BandpassSpec& spec, double fs);

/// Zero-phase band-pass: mean removal, odd-extension padding, forward-backward FIR.
Signal1D bandpass_fir(const Signal1D& signal, const BandpassSpec& spec);
std::vector<double> filtfilt_fir(std::span<const double> taps, std::span<const double> x);

/// Detrend, band-pass and restore the original mean level.
std::vector<double> condition(std::span<const double> x, double fs, const BandpassSpec& spec,
                              bool detrend_first = true, bool keep_mean = true);

Signal1D moving_average(const Signal1D& signal, std::size_t width);

/// Sample layout of a sliding-window analysis.
struct WindowGrid {
  std::size_t length = 0;
  double step_s = 0.0;
  std::vector<std::size_t> starts;

  std::size_t count() const noexcept { return starts.size(); }
};

WindowGrid window_grid(std::size_t n_samples, double fs, double win_s, double step_s);

struct Window {
  double start_s = 0.0;
  Signal1D signal;
};

std::vector<Window> sliding_windows(const Signal1D& signal, double win_s, double step_s);

struct WelchParams {
  std::size_t seg_len = 0;  // 0: min(N, 256)
  double overlap_frac = 0.5;
  std::size_t nfft = 0;  // 0: next power of two >= max(1024, N)
};

Spectrum welch_psd(const Signal1D& signal, std::size_t seg_len, double overlap_frac,
                   std::size_t nfft);
Spectrum welch_psd(const Signal1D& signal, const WelchParams& params = {});
Spectrum welch_psd(std::span<const double> samples, double fs, const WelchParams& params = {});

/// Rectangle-rule integral of the PSD over [lo, hi].
double band_power(const Spectrum& spectrum, double lo, double hi);

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // population
double stddev(std::span<const double> x);
std::size_t next_pow2(std::size_t n);

}  // namespace fp::dsp
