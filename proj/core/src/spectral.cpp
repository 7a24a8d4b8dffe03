#include "facepulse/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "facepulse/error.hpp"

namespace fp::spectral {

namespace {

// Leakage guard: an in-band maximum this far below the global maximum is a
// sidelobe of an out-of-band tone, not a pulse.
constexpr double kLeakageRatio = 0.01;

}  // namespace

std::optional<double> estimate_hr(std::span<const double> x, double fs, const SpectralConfig& cfg) {
  if (x.size() < 2 || !(dsp::variance(x) > 0.0)) return std::nullopt;
  const auto psd = dsp::welch_psd(x, fs, cfg.welch);
  const auto& f = psd.freqs;
  const auto& p = psd.power;

  std::size_t lo = f.size(), hi = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] >= cfg.band_lo && f[i] <= cfg.band_hi) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
  }
  if (lo > hi) return std::nullopt;
  std::size_t k = lo;
  for (std::size_t i = lo; i <= hi; ++i)
    if (p[i] > p[k]) k = i;
  if (!(p[k] > 0.0)) return std::nullopt;
  if (k == lo && k > 0 && p[k - 1] > p[k]) return std::nullopt;
  if (k == hi && k + 1 < p.size() && p[k + 1] > p[k]) return std::nullopt;
  const double global = *std::max_element(p.begin() + 1, p.end());
  if (p[k] < kLeakageRatio * global) return std::nullopt;

  double freq = f[k];
  if (k > 0 && k + 1 < p.size()) {
    const double a = p[k - 1], b = p[k], c = p[k + 1];
    const double den = a - 2.0 * b + c;
    if (den < 0.0) {
      const double delta = 0.5 * (a - c) / den;
      freq += std::clamp(delta, -0.5, 0.5) * psd.bin_width();
    }
  }
  const double bpm = 60.0 * freq;
  if (bpm < 60.0 * cfg.band_lo || bpm > 60.0 * cfg.band_hi) return std::nullopt;
  return bpm;
}

void hold_fill(HrSeries& s) {
  const auto first = std::find(s.valid.begin(), s.valid.end(), true);
  if (first == s.valid.end()) return;
  double last = s.bpm[static_cast<std::size_t>(first - s.valid.begin())];
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.valid[i])
      last = s.bpm[i];
    else
      s.bpm[i] = last;
  }
}

HrSeries hr_series(const dsp::Signal1D& signal, const SpectralConfig& cfg, const std::vector<bool>& sample_valid) {
  dsp::validate(signal);
  if (!sample_valid.empty() && sample_valid.size() != signal.size())
    fail(Errc::invalid_input, "sample mask length differs from the signal");
  const auto grid = dsp::window_grid(signal.size(), signal.fs, cfg.win_s, cfg.step_s);
  if (grid.count() == 0)
    fail(Errc::empty_series, "signal of " + std::to_string(signal.duration()) + " s is shorter than one " +
                                 std::to_string(cfg.win_s) + " s window");
  const double total_var = dsp::variance(signal.samples);

  HrSeries out;
  for (std::size_t w = 0; w < grid.count(); ++w) {
    const std::size_t s0 = grid.starts[w];
    const std::span<const double> win(signal.samples.data() + s0, grid.length);
    out.times.push_back(static_cast<double>(w) * cfg.step_s);
    bool ok = true;
    if (!sample_valid.empty()) {
      const auto bad = std::count(sample_valid.begin() + static_cast<std::ptrdiff_t>(s0),
                                  sample_valid.begin() + static_cast<std::ptrdiff_t>(s0 + grid.length), false);
      ok = static_cast<double>(bad) <= cfg.gaps.max_invalid_frac * static_cast<double>(grid.length);
    }
    std::optional<double> bpm;
    if (ok && dsp::variance(win) > 1e-12 * total_var) bpm = estimate_hr(win, signal.fs, cfg);
    out.bpm.push_back(bpm.value_or(0.0));
    out.valid.push_back(bpm.has_value());
  }
  hold_fill(out);
  return out;
}

dsp::Signal1D resample_linear(const dsp::Signal1D& s, double fs_out) {
  dsp::validate(s);
  if (!(fs_out > 0.0)) fail(Errc::invalid_input, "resample target rate must be positive");
  if (fs_out == s.fs) return s;
  dsp::Signal1D out;
  out.fs = fs_out;
  const double T = static_cast<double>(s.size() - 1) / s.fs;
  const auto n = static_cast<std::size_t>(std::floor(T * fs_out + 1e-9)) + 1;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) / fs_out * s.fs;
    const auto j = std::min(static_cast<std::size_t>(pos), s.size() - 1);
    const double frac = pos - static_cast<double>(j);
    out.samples[i] = j + 1 < s.size() ? s.samples[j] * (1.0 - frac) + s.samples[j + 1] * frac : s.samples[j];
  }
  return out;
}

std::vector<bool> mask_reference_gaps(const dsp::Signal1D& reference, const GapParams& p) {
  const auto& x = reference.samples;
  std::vector<bool> valid(x.size(), true);
  if (x.size() < 2) return valid;
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double eps = p.eps_frac * (*mx - *mn);
  std::size_t i = 0;
  while (i + 1 < x.size()) {
    if (!(std::abs(x[i + 1] - x[i]) <= eps)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j + 1 < x.size() && std::abs(x[j + 1] - x[j]) <= eps) ++j;
    // Run covers samples i..j, i.e. (j - i) sample steps.
    if (static_cast<double>(j - i) / reference.fs > p.min_duration_s)
      std::fill(valid.begin() + static_cast<std::ptrdiff_t>(i), valid.begin() + static_cast<std::ptrdiff_t>(j + 1),
                false);
    i = j;
  }
  return valid;
}

std::vector<std::size_t> detect_r_peaks(const dsp::Signal1D& ecg) {
  dsp::validate(ecg);
  const double fs = ecg.fs;
  // Band limit to the QRS energy band (5-15 Hz), clipped to the Nyquist.
  std::vector<double> band = ecg.samples;
  const double hi = std::min(15.0, 0.45 * fs);
  if (hi > 5.0) {
    dsp::BandpassSpec spec{5.0, hi, 6.0, 0};
    spec.num_taps = static_cast<int>(std::lround(0.25 * fs)) | 1;
    if (static_cast<std::size_t>(spec.num_taps) <= ecg.size()) band = dsp::condition(ecg.samples, fs, spec, true, false);
  }
  // Derivative, squaring, 150 ms moving integration.
  std::vector<double> e(band.size(), 0.0);
  for (std::size_t i = 2; i + 2 < band.size(); ++i) {
    const double d = (2.0 * band[i + 1] + band[i + 2] - band[i - 2] - 2.0 * band[i - 1]) / 8.0;
    e[i] = d * d;
  }
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.15 * fs)));
  const auto integ = dsp::moving_average({e, fs}, std::min(w, e.size())).samples;

  // Adaptive threshold between running signal and noise peak levels.
  const auto refractory = static_cast<std::size_t>(std::lround(0.25 * fs));
  const double top = *std::max_element(integ.begin(), integ.end());
  double spk = 0.5 * top, npk = 0.0;
  std::vector<std::size_t> peaks;
  std::size_t last = 0;
  for (std::size_t i = 1; i + 1 < integ.size(); ++i) {
    if (!(integ[i] > integ[i - 1] && integ[i] >= integ[i + 1])) continue;
    const double thr = npk + 0.25 * (spk - npk);
    if (integ[i] > thr && (peaks.empty() || i - last > refractory)) {
      // Locate the R wave as the band-limited maximum near the energy peak.
      const std::size_t a = i > w ? i - w : 0;
      const std::size_t b = std::min(band.size() - 1, i + w / 2);
      std::size_t r = a;
      for (std::size_t k = a; k <= b; ++k)
        if (band[k] > band[r]) r = k;
      if (peaks.empty() || r > peaks.back() + refractory) {
        peaks.push_back(r);
        last = i;
      }
      spk = 0.125 * integ[i] + 0.875 * spk;
    } else {
      npk = 0.125 * integ[i] + 0.875 * npk;
    }
  }
  // Beats cut by the record edges only locate the filter transient.
  std::erase_if(peaks, [&](std::size_t r) { return r < w || r + w >= band.size(); });
  return peaks;
}

HrSeries reference_hr(const dsp::Signal1D& reference, ReferenceKind kind, const SpectralConfig& cfg,
                      double target_fs) {
  dsp::validate(reference);
  if (kind == ReferenceKind::bvp) {
    const auto mask = mask_reference_gaps(reference, cfg.gaps);
    if (target_fs <= 0.0 || target_fs == reference.fs) return hr_series(reference, cfg, mask);
    const auto rs = resample_linear(reference, target_fs);
    std::vector<bool> rmask(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto j = static_cast<std::size_t>(std::lround(static_cast<double>(i) / target_fs * reference.fs));
      rmask[i] = mask[std::min(j, mask.size() - 1)];
    }
    return hr_series(rs, cfg, rmask);
  }

  const auto grid = dsp::window_grid(reference.size(), reference.fs, cfg.win_s, cfg.step_s);
  if (grid.count() == 0) fail(Errc::empty_series, "ECG reference shorter than one window");
  const auto peaks = detect_r_peaks(reference);
  HrSeries out;
  for (std::size_t w = 0; w < grid.count(); ++w) {
    const double t0 = static_cast<double>(grid.starts[w]) / reference.fs;
    const double t1 = t0 + static_cast<double>(grid.length) / reference.fs;
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 1; k < peaks.size(); ++k) {
      const double tb = static_cast<double>(peaks[k]) / reference.fs;
      if (tb < t0 || tb >= t1) continue;
      const double rr = static_cast<double>(peaks[k] - peaks[k - 1]) / reference.fs;
      if (rr <= 0.0) continue;
      sum += 60.0 / rr;
      ++n;
    }
    out.times.push_back(static_cast<double>(w) * cfg.step_s);
    const double bpm = n > 0 ? sum / n : 0.0;
    const bool ok = n > 0 && bpm >= 60.0 * cfg.band_lo && bpm <= 60.0 * cfg.band_hi;
    out.bpm.push_back(ok ? bpm : 0.0);
    out.valid.push_back(ok);
  }
  hold_fill(out);
  return out;
}

}  // namespace fp::spectral
