#include "facepulse/dsp.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>

#include "facepulse/error.hpp"
#include "fft.hpp"

namespace fp::dsp {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void validate(const Signal1D& signal) {
  if (!(signal.fs > 0.0) || !std::isfinite(signal.fs))
    fail(Errc::invalid_input, "sampling rate must be finite and positive");
  if (signal.samples.empty()) fail(Errc::invalid_input, "signal is empty");
  for (double v : signal.samples)
    if (!std::isfinite(v)) fail(Errc::invalid_input, "signal contains NaN/Inf");
}

BandpassSpec BandpassSpec::for_rate(double fs, double low_hz, double high_hz, double beta) {
  BandpassSpec spec{low_hz, high_hz, beta, 127};
  int taps = static_cast<int>(std::lround(4.2 * fs));
  if (taps % 2 == 0) ++taps;
  spec.num_taps = std::max(taps, 3);
  return spec;
}

std::vector<double> detrend_linear(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(x.begin(), x.end());
  if (n < 2) {
    if (n == 1) out[0] = 0.0;
    return out;
  }
  // Centered abscissa keeps the normal equations well conditioned.
  const double tc = (static_cast<double>(n) - 1.0) / 2.0;
  double sxx = 0.0, sxy = 0.0;
  const double my = mean(x);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - tc;
    sxx += t * t;
    sxy += t * (x[i] - my);
  }
  const double slope = sxy / sxx;
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - my - slope * (static_cast<double>(i) - tc);
  return out;
}

namespace {

std::vector<double> detrend_smoothness_priors(std::span<const double> z, double lambda) {
  const auto n = static_cast<Eigen::Index>(z.size());
  using Sp = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(3 * (n - 2)));
  for (Eigen::Index i = 0; i + 2 < n; ++i) {
    trip.emplace_back(i, i, 1.0);
    trip.emplace_back(i, i + 1, -2.0);
    trip.emplace_back(i, i + 2, 1.0);
  }
  Sp d2(n - 2, n);
  d2.setFromTriplets(trip.begin(), trip.end());
  Sp id(n, n);
  id.setIdentity();
  Sp h = id + (lambda * lambda) * Sp(d2.transpose() * d2);
  Eigen::SimplicialLDLT<Sp> solver(h);
  if (solver.info() != Eigen::Success) fail(Errc::invalid_input, "smoothness-priors solve failed");
  Eigen::Map<const Eigen::VectorXd> zv(z.data(), n);
  Eigen::VectorXd trend = solver.solve(zv);
  std::vector<double> out(z.size());
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = zv[i] - trend[i];
  return out;
}

const std::vector<double>& cached_taps(const BandpassSpec& spec, double fs) {
  static std::mutex mutex;
  static std::map<std::tuple<double, double, double, int, double>, std::vector<double>> cache;
  const auto key = std::make_tuple(spec.low_hz, spec.high_hz, spec.beta, spec.num_taps, fs);
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, design_bandpass(spec, fs)).first;
  return it->second;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

Signal1D detrend(const Signal1D& signal, const DetrendMethod& method) {
  validate(signal);
  if (signal.size() < 3) fail(Errc::invalid_input, "detrend needs at least 3 samples");
  Signal1D out{{}, signal.fs};
  if (std::holds_alternative<LinearDetrend>(method)) {
    out.samples = detrend_linear(signal.samples);
  } else {
    out.samples = detrend_smoothness_priors(signal.samples, std::get<SmoothnessPriors>(method).lambda);
  }
  return out;
}

std::vector<double> design_bandpass(const BandpassSpec& spec, double fs) {
  if (!(fs > 0.0)) fail(Errc::invalid_input, "sampling rate must be positive");
  if (!(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz && spec.high_hz < fs / 2.0))
    fail(Errc::invalid_band, "band [" + std::to_string(spec.low_hz) + ", " +
                                 std::to_string(spec.high_hz) + "] Hz not inside (0, " +
                                 std::to_string(fs / 2.0) + ")");
  if (spec.num_taps < 3 || spec.num_taps % 2 == 0)
    fail(Errc::invalid_input, "num_taps must be odd and >= 3");

  const int m = spec.num_taps;
  const double c = (m - 1) / 2.0;
  const double f1 = spec.low_hz / fs;
  const double f2 = spec.high_hz / fs;
  const double i0_beta = std::cyl_bessel_i(0.0, spec.beta);
  std::vector<double> h(static_cast<std::size_t>(m));
  for (int n = 0; n < m; ++n) {
    const double k = n - c;
    const double r = 2.0 * n / (m - 1) - 1.0;
    const double w = std::cyl_bessel_i(0.0, spec.beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[static_cast<std::size_t>(n)] = (2.0 * f2 * sinc(2.0 * f2 * k) - 2.0 * f1 * sinc(2.0 * f1 * k)) * w;
  }
  const double f0 = (f1 + f2) / 2.0;
  double gain = 0.0;
  for (int n = 0; n < m; ++n) gain += h[static_cast<std::size_t>(n)] * std::cos(2.0 * std::numbers::pi * f0 * (n - c));
  for (double& v : h) v /= gain;
  return h;
}

std::vector<double> filtfilt_fir(std::span<const double> taps, std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t m = taps.size();
  if (n < 2) return {x.begin(), x.end()};
  const std::size_t pad = std::min(3 * m, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto causal = [&](const std::vector<double>& in) {
    std::vector<double> out(in.size(), 0.0);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const std::size_t kmax = std::min(m, i + 1);
      double acc = 0.0;
      for (std::size_t k = 0; k < kmax; ++k) acc += taps[k] * in[i - k];
      out[i] = acc;
    }
    return out;
  };

  std::vector<double> y = causal(ext);
  std::reverse(y.begin(), y.end());
  y = causal(y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad), y.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Signal1D bandpass_fir(const Signal1D& signal, const BandpassSpec& spec) {
  validate(signal);
  const auto& taps = cached_taps(spec, signal.fs);
  if (signal.size() < static_cast<std::size_t>(spec.num_taps))
    fail(Errc::invalid_input, "signal (" + std::to_string(signal.size()) +
                                  " samples) shorter than the filter (" +
                                  std::to_string(spec.num_taps) + " taps)");
  const double m = mean(signal.samples);
  std::vector<double> centered(signal.samples);
  for (double& v : centered) v -= m;
  return {filtfilt_fir(taps, centered), signal.fs};
}

std::vector<double> condition(std::span<const double> x, double fs, const BandpassSpec& spec,
                              bool detrend_first, bool keep_mean) {
  const double m = mean(x);
  Signal1D tmp{detrend_first ? detrend_linear(x) : std::vector<double>(x.begin(), x.end()), fs};
  Signal1D filtered = bandpass_fir(tmp, spec);
  if (keep_mean)
    for (double& v : filtered.samples) v += m;
  return std::move(filtered.samples);
}

Signal1D moving_average(const Signal1D& signal, std::size_t width) {
  validate(signal);
  const std::size_t n = signal.size();
  if (width == 0 || width > n) fail(Errc::invalid_input, "moving-average width must be in [1, length]");
  if (width == 1) return signal;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + signal.samples[i];
  const std::size_t left = (width - 1) / 2;
  const std::size_t right = width / 2;
  Signal1D out{std::vector<double>(n), signal.fs};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(n - 1, i + right);
    out.samples[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
  }
  // Exact constants stay exact regardless of prefix-sum rounding.
  if (std::all_of(signal.samples.begin(), signal.samples.end(),
                  [&](double v) { return v == signal.samples.front(); }))
    std::fill(out.samples.begin(), out.samples.end(), signal.samples.front());
  return out;
}

WindowGrid window_grid(std::size_t n_samples, double fs, double win_s, double step_s) {
  const double len = std::round(win_s * fs);
  if (!(len >= 2.0)) fail(Errc::invalid_input, "window must span at least 2 samples");
  if (!(step_s > 0.0)) fail(Errc::invalid_input, "window step must be positive");
  WindowGrid grid;
  grid.length = static_cast<std::size_t>(len);
  grid.step_s = step_s;
  for (std::size_t k = 0;; ++k) {
    const auto start = static_cast<std::size_t>(std::llround(static_cast<double>(k) * step_s * fs));
    if (start + grid.length > n_samples) break;
    grid.starts.push_back(start);
  }
  return grid;
}

std::vector<Window> sliding_windows(const Signal1D& signal, double win_s, double step_s) {
  validate(signal);
  const WindowGrid grid = window_grid(signal.size(), signal.fs, win_s, step_s);
  std::vector<Window> out;
  out.reserve(grid.count());
  for (std::size_t k = 0; k < grid.count(); ++k) {
    const auto first = signal.samples.begin() + static_cast<std::ptrdiff_t>(grid.starts[k]);
    out.push_back({static_cast<double>(k) * step_s,
                   {std::vector<double>(first, first + static_cast<std::ptrdiff_t>(grid.length)), signal.fs}});
  }
  return out;
}

Spectrum welch_psd(std::span<const double> x, double fs, const WelchParams& params) {
  const std::size_t n = x.size();
  if (n < 2) fail(Errc::invalid_input, "welch needs at least 2 samples");
  const std::size_t seg = params.seg_len ? params.seg_len : std::min<std::size_t>(n, 256);
  const std::size_t nfft = params.nfft ? params.nfft : next_pow2(std::max<std::size_t>(1024, n));
  if (seg < 2 || seg > n) fail(Errc::invalid_input, "segment length must be in [2, N]");
  if (!(params.overlap_frac >= 0.0 && params.overlap_frac < 1.0))
    fail(Errc::invalid_input, "overlap fraction must be in [0, 1)");
  if (nfft < seg) fail(Errc::invalid_input, "nfft must be >= segment length");

  const auto noverlap = static_cast<std::size_t>(std::floor(params.overlap_frac * static_cast<double>(seg)));
  const std::size_t step = std::max<std::size_t>(1, seg - noverlap);

  std::vector<double> win(seg);
  double wss = 0.0;
  for (std::size_t i = 0; i < seg; ++i) {
    win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
    wss += win[i] * win[i];
  }

  const std::size_t nbins = nfft / 2 + 1;
  Spectrum out;
  out.freqs.resize(nbins);
  out.power.assign(nbins, 0.0);
  for (std::size_t k = 0; k < nbins; ++k) out.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(nfft);

  std::size_t segments = 0;
  std::vector<double> buf(seg);
  for (std::size_t start = 0; start + seg <= n; start += step) {
    const double m = mean(x.subspan(start, seg));
    for (std::size_t i = 0; i < seg; ++i) buf[i] = (x[start + i] - m) * win[i];
    const auto spec = detail::rfft(buf, nfft);
    for (std::size_t k = 0; k < nbins; ++k) out.power[k] += std::norm(spec[k]);
    ++segments;
  }
  const double scale = 1.0 / (fs * wss * static_cast<double>(segments));
  for (std::size_t k = 0; k < nbins; ++k) {
    const bool edge = k == 0 || (nfft % 2 == 0 && k == nbins - 1);
    out.power[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return out;
}

Spectrum welch_psd(const Signal1D& signal, const WelchParams& params) {
  validate(signal);
  return welch_psd(signal.samples, signal.fs, params);
}

Spectrum welch_psd(const Signal1D& signal, std::size_t seg_len, double overlap_frac, std::size_t nfft) {
  return welch_psd(signal, WelchParams{seg_len, overlap_frac, nfft});
}

double band_power(const Spectrum& spectrum, double lo, double hi) {
  const double df = spectrum.bin_width();
  double acc = 0.0;
  for (std::size_t k = 0; k < spectrum.freqs.size(); ++k)
    if (spectrum.freqs[k] >= lo && spectrum.freqs[k] <= hi) acc += spectrum.power[k];
  return acc * df;
}

}  // namespace fp::dsp
