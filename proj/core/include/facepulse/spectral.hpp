#pragma once

#include <optional>
#include <span>
#include <vector>

#include "facepulse/dsp.hpp"

namespace fp::spectral {

struct GapParams {
  double eps_frac = 1e-6;       // flatline step threshold, fraction of the dynamic range
  double min_duration_s = 0.5;  // shorter holds stay valid
  double max_invalid_frac = 0.2;
};

struct SpectralConfig {
  double band_lo = 0.75;
  double band_hi = 4.0;
  dsp::WelchParams welch{};
  double win_s = 10.0;
  double step_s = 1.0;
  GapParams gaps{};
};

/// Per-window heart rate. Invalid windows carry the previous valid value.
struct HrSeries {
  std::vector<double> times;  // window start, seconds
  std::vector<double> bpm;
  std::vector<bool> valid;

  std::size_t size() const noexcept { return times.size(); }
  double step() const noexcept { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  friend bool operator==(const HrSeries&, const HrSeries&) = default;
};

/// 60 x refined in-band Welch peak. std::nullopt for flat windows, windows
/// without in-band bins, and spectra whose in-band maximum is only leakage
/// from a stronger out-of-band peak.
std::optional<double> estimate_hr(std::span<const double> x, double fs, const SpectralConfig& cfg = {});

/// Fills invalid entries by holding the previous valid value (leading gaps take
/// the first valid one).
void hold_fill(HrSeries& s);

/// Sliding-window HR. `sample_valid`, when given, invalidates windows whose
/// invalid fraction exceeds cfg.gaps.max_invalid_frac. Throws Errc::empty_series.
HrSeries hr_series(const dsp::Signal1D& signal, const SpectralConfig& cfg = {},
                   const std::vector<bool>& sample_valid = {});

enum class ReferenceKind { bvp, ecg };

/// bvp: resampled to target_fs (when > 0) and sent through hr_series.
/// ecg: R peaks, RR intervals, mean bpm per window.
HrSeries reference_hr(const dsp::Signal1D& reference, ReferenceKind kind, const SpectralConfig& cfg = {},
                      double target_fs = 0.0);

/// False inside flatline runs longer than the configured duration.
std::vector<bool> mask_reference_gaps(const dsp::Signal1D& reference, const GapParams& p = {});

dsp::Signal1D resample_linear(const dsp::Signal1D& s, double fs_out);

/// R-peak sample indices of an ECG trace.
std::vector<std::size_t> detect_r_peaks(const dsp::Signal1D& ecg);

}  // namespace fp::spectral
