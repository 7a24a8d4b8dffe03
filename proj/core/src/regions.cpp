#include "facepulse/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "facepulse/error.hpp"

namespace fp::regions {

namespace {

std::vector<int> partition(int len, int n) {
  std::vector<int> edges(static_cast<std::size_t>(n) + 1, 0);
  const int base = len / n;
  const int extra = len % n;
  for (int i = 0; i < n; ++i) edges[static_cast<std::size_t>(i) + 1] = edges[static_cast<std::size_t>(i)] + base + (i < extra ? 1 : 0);
  return edges;
}

std::vector<double> znorm(std::span<const double> x) {
  const double m = dsp::mean(x);
  const double s = dsp::stddev(x);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = s > 0.0 ? (x[i] - m) / s : 0.0;
  return out;
}

}  // namespace

std::vector<RegionBox> grid_partition(int width, int height, int n) {
  if (n < 1 || n > std::min(width, height))
    fail(Errc::invalid_input, "grid side " + std::to_string(n) + " does not fit a " + std::to_string(width) + "x" +
                                  std::to_string(height) + " raster");
  const auto xs = partition(width, n);
  const auto ys = partition(height, n);
  std::vector<RegionBox> boxes;
  boxes.reserve(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      boxes.push_back({r * n + c, xs[static_cast<std::size_t>(c)], ys[static_cast<std::size_t>(r)],
                       xs[static_cast<std::size_t>(c) + 1], ys[static_cast<std::size_t>(r) + 1]});
  return boxes;
}

RgbTrace RgbTrace::slice(std::size_t start, std::size_t len) const {
  RgbTrace out;
  out.fs = fs;
  out.region_id = region_id;
  const auto take = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(start),
                               v.begin() + static_cast<std::ptrdiff_t>(start + len));
  };
  out.r = take(r);
  out.g = take(g);
  out.b = take(b);
  if (!moments.empty())
    out.moments.assign(moments.begin() + static_cast<std::ptrdiff_t>(start),
                       moments.begin() + static_cast<std::ptrdiff_t>(start + len));
  return out;
}

TraceAccumulator::TraceAccumulator(std::vector<RegionBox> boxes, double fs, const facegeom::CanonicalMesh* mesh,
                                   bool with_moments)
    : boxes_(std::move(boxes)), mesh_(mesh), with_moments_(with_moments) {
  if (with_moments_ && !mesh_) fail(Errc::invalid_input, "pixel moments need the canonical mesh");
  traces_.resize(boxes_.size());
  for (std::size_t i = 0; i < boxes_.size(); ++i) {
    if (boxes_[i].x1 <= boxes_[i].x0 || boxes_[i].y1 <= boxes_[i].y0)
      fail(Errc::invalid_input, "empty region box " + std::to_string(boxes_[i].id));
    traces_[i].fs = fs;
    traces_[i].region_id = boxes_[i].id;
  }
}

void TraceAccumulator::push(const ImageF& frame) {
  for (std::size_t i = 0; i < boxes_.size(); ++i) {
    const RegionBox& b = boxes_[i];
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > frame.width || b.y1 > frame.height)
      fail(Errc::invalid_input, "region box " + std::to_string(b.id) + " exceeds the raster");
    double s[3] = {0.0, 0.0, 0.0};
    std::array<double, 6> m{};
    std::size_t skin = 0;
    for (int y = b.y0; y < b.y1; ++y) {
      const float* row = &frame.data[(static_cast<std::size_t>(y) * frame.width + b.x0) * 3];
      for (int x = b.x0; x < b.x1; ++x, row += 3) {
        s[0] += row[0];
        s[1] += row[1];
        s[2] += row[2];
        if (with_moments_ && mesh_->covers(x, y)) {
          const double r = row[0], g = row[1], bl = row[2];
          m[0] += r * r;
          m[1] += g * g;
          m[2] += bl * bl;
          m[3] += r * g;
          m[4] += r * bl;
          m[5] += g * bl;
          ++skin;
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(b.area());
    RgbTrace& t = traces_[i];
    t.r.push_back(s[0] * inv);
    t.g.push_back(s[1] * inv);
    t.b.push_back(s[2] * inv);
    if (with_moments_) {
      if (skin > 0)
        for (double& v : m) v /= static_cast<double>(skin);
      t.moments.push_back(m);
    }
  }
}

std::vector<RgbTrace> extract_traces(const facegeom::NormalizedFaceStack& stack, std::span<const RegionBox> boxes) {
  TraceAccumulator acc({boxes.begin(), boxes.end()}, stack.fs);
  for (const ImageF& f : stack.frames) acc.push(f);
  return std::move(acc).take();
}

double katz_fd(std::span<const double> x) {
  if (x.size() < 3) fail(Errc::invalid_input, "katz_fd needs at least 3 samples");
  double L = 0.0;
  double d = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double dy = x[i] - x[i - 1];
    L += std::sqrt(1.0 + dy * dy);
    const double dx0 = static_cast<double>(i);
    const double dy0 = x[i] - x[0];
    d = std::max(d, std::sqrt(dx0 * dx0 + dy0 * dy0));
  }
  const bool constant = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
  if (constant) fail(Errc::undefined_kfd, "katz_fd of a constant series");
  const double a = L / static_cast<double>(x.size() - 1);
  const double n = L / a;
  const double ln = std::log10(n);
  return ln / (std::log10(d / L) + ln);
}

double dfa_alpha(std::span<const double> x) {
  const std::size_t N = x.size();
  if (N < 64) fail(Errc::invalid_input, "dfa_alpha needs at least 64 samples");
  const double m = dsp::mean(x);
  std::vector<double> y(N);
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += x[i] - m;
    y[i] = acc;
  }

  const double lo = std::log(4.0);
  const double hi = std::log(static_cast<double>(N) / 4.0);
  std::vector<std::size_t> sizes;
  for (int k = 0; k < 10; ++k) {
    const auto s = static_cast<std::size_t>(std::lround(std::exp(lo + (hi - lo) * k / 9.0)));
    if (sizes.empty() || s > sizes.back()) sizes.push_back(s);
  }

  std::vector<double> lx, ly;
  for (std::size_t n : sizes) {
    const std::size_t boxes = N / n;
    // Linear fit per box with centered abscissa; residual = SS - slope * Sxy.
    const double c = 0.5 * static_cast<double>(n - 1);
    double sxx = 0.0;
    for (std::size_t j = 0; j < n; ++j) sxx += (j - c) * (j - c);
    double total = 0.0;
    for (std::size_t b = 0; b < boxes; ++b) {
      const double* seg = &y[b * n];
      double sy = 0.0;
      for (std::size_t j = 0; j < n; ++j) sy += seg[j];
      const double my = sy / static_cast<double>(n);
      double sxy = 0.0, syy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double dy = seg[j] - my;
        sxy += (j - c) * dy;
        syy += dy * dy;
      }
      total += std::max(0.0, syy - sxy * sxy / sxx);
    }
    const double F = std::sqrt(total / static_cast<double>(boxes * n));
    if (F > 0.0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(F));
    }
  }
  if (lx.size() < 2) fail(Errc::invalid_input, "dfa_alpha: fluctuation function vanishes");
  const double mx = dsp::mean(lx);
  const double my = dsp::mean(ly);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  return num / den;
}

DfaClass classify_dfa(double alpha) noexcept {
  if (alpha < 0.45) return DfaClass::anti_correlated;
  if (alpha <= 0.55) return DfaClass::uncorrelated;
  if (alpha <= 1.0) return DfaClass::correlated;
  return DfaClass::non_stationary;
}

double sample_entropy(std::span<const double> x, int m, double r) {
  const std::size_t N = x.size();
  const auto mm = static_cast<std::size_t>(m);
  if (m < 1 || N <= mm + 1) fail(Errc::invalid_input, "sample_entropy: series too short");
  if (r < 0.0) r = 0.2 * dsp::stddev(x);
  // Both counts run over the same N - m templates so A and B are comparable.
  const std::size_t templates = N - mm;
  std::size_t B = 0, A = 0;
  for (std::size_t i = 0; i + 1 < templates; ++i) {
    for (std::size_t j = i + 1; j < templates; ++j) {
      bool match = true;
      for (std::size_t k = 0; k < mm; ++k) {
        if (std::abs(x[i + k] - x[j + k]) > r) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      ++B;
      if (std::abs(x[i + mm] - x[j + mm]) <= r) ++A;
    }
  }
  if (A == 0 || B == 0) return std::numeric_limits<double>::infinity();
  return -std::log(static_cast<double>(A) / static_cast<double>(B));
}

std::size_t zero_crossings(std::span<const double> x) {
  if (x.empty()) return 0;
  const double m = dsp::mean(x);
  std::size_t count = 0;
  int prev = 0;
  for (double v : x) {
    const double d = v - m;
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++count;
    prev = s;
  }
  return count;
}

RegionStats compute_region_stats(const RgbTrace& trace, const StatsOptions& opt) {
  const std::size_t N = trace.size();
  if (N < 64) fail(Errc::invalid_input, "region stats need at least 64 samples");
  std::vector<double> raw;
  switch (opt.channel) {
    case ChannelMix::green: raw = trace.g; break;
    case ChannelMix::red: raw = trace.r; break;
    case ChannelMix::blue: raw = trace.b; break;
    case ChannelMix::mean_rgb:
      raw.resize(N);
      for (std::size_t i = 0; i < N; ++i) raw[i] = (trace.r[i] + trace.g[i] + trace.b[i]) / 3.0;
      break;
  }

  RegionStats st;
  st.region_id = trace.region_id;
  st.mean = dsp::mean(raw);
  st.variance = dsp::variance(raw);
  st.std = std::sqrt(st.variance);
  if (!(st.variance > 0.0)) return st;

  auto spec = dsp::BandpassSpec::for_rate(trace.fs, opt.band_lo, opt.band_hi, opt.beta);
  if (static_cast<std::size_t>(spec.num_taps) > N) spec.num_taps = static_cast<int>(N % 2 == 1 ? N : N - 1);
  const std::vector<double> cond = dsp::condition(raw, trace.fs, spec, true, false);

  const auto psd = dsp::welch_psd(cond, trace.fs);
  st.psd_energy = dsp::band_power(psd, opt.band_lo, opt.band_hi);
  std::size_t peak = 0;
  double peak_p = -1.0;
  for (std::size_t i = 0; i < psd.freqs.size(); ++i) {
    if (psd.freqs[i] < opt.band_lo || psd.freqs[i] > opt.band_hi) continue;
    if (psd.power[i] > peak_p) {
      peak_p = psd.power[i];
      peak = i;
    }
  }
  double near = 0.0, rest = 0.0;
  for (std::size_t i = 0; i < psd.freqs.size(); ++i) {
    if (psd.freqs[i] < opt.band_lo || psd.freqs[i] > opt.band_hi) continue;
    (std::abs(psd.freqs[i] - psd.freqs[peak]) <= 0.2 ? near : rest) += psd.power[i];
  }
  st.snr_db = rest > 0.0 ? 10.0 * std::log10(near / rest) : (near > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);

  const std::vector<double> z = znorm(cond);
  st.zero_crossings = zero_crossings(z);
  try {
    st.kfd = katz_fd(z);
    st.kfd_defined = true;
  } catch (const Error& e) {
    if (e.code() != Errc::undefined_kfd) throw;
  }
  try {
    st.dfa_alpha = dfa_alpha(z);
    st.dfa_defined = true;
  } catch (const Error& e) {
    if (e.code() != Errc::invalid_input) throw;
  }
  st.sample_entropy = sample_entropy(z, 2, 0.2);
  return st;
}

void SelectionConfig::validate() const {
  if (grid_n < 2) fail(Errc::config, "selection.grid_n must be >= 2");
  if (!(kfd_threshold > 0.0) || (kfd_mode == KfdMode::relative && kfd_threshold > 1.0))
    fail(Errc::config, "selection.kfd_threshold out of range");
  if (!(dfa_low < dfa_high)) fail(Errc::config, "selection.dfa_low must be below dfa_high");
  if (max_regions < 1) fail(Errc::config, "selection.max_regions must be >= 1");
  if (!(window_s > 0.0)) fail(Errc::config, "selection.window_s must be positive");
}

Selection select_regions(std::span<const RegionStats> stats, const SelectionConfig& cfg) {
  std::vector<const RegionStats*> live;
  for (const auto& s : stats)
    if (s.variance > 0.0) live.push_back(&s);

  double kmax = 0.0;
  for (const auto* s : live)
    if (s->kfd_defined) kmax = std::max(kmax, s->kfd);
  std::vector<const RegionStats*> kept;
  for (const auto* s : live) {
    if (!s->kfd_defined) continue;
    const double k = cfg.kfd_mode == KfdMode::relative ? s->kfd / kmax : s->kfd;
    if (k >= cfg.kfd_threshold) kept.push_back(s);
  }
  std::erase_if(kept, [&](const RegionStats* s) {
    return !s->dfa_defined || !(s->dfa_alpha > cfg.dfa_low && s->dfa_alpha <= cfg.dfa_high);
  });

  const auto by_energy = [](const RegionStats* a, const RegionStats* b) {
    if (a->psd_energy != b->psd_energy) return a->psd_energy > b->psd_energy;
    return a->region_id < b->region_id;
  };
  std::sort(kept.begin(), kept.end(), by_energy);
  if (kept.size() > cfg.max_regions) kept.resize(cfg.max_regions);

  Selection sel;
  if (kept.empty()) {
    sel.fallback = true;
    if (!stats.empty()) {
      std::vector<const RegionStats*> all;
      for (const auto& s : stats) all.push_back(&s);
      sel.ids.push_back((*std::min_element(all.begin(), all.end(), by_energy))->region_id);
    }
    return sel;
  }
  for (const auto* s : kept) sel.ids.push_back(s->region_id);
  std::sort(sel.ids.begin(), sel.ids.end());
  return sel;
}

Aggregate aggregate_regions(std::span<const dsp::Signal1D> signals, std::span<const int> ids) {
  if (ids.empty()) fail(Errc::invalid_input, "aggregate_regions: no regions selected");
  Aggregate out;
  const std::size_t N = signals[static_cast<std::size_t>(ids[0])].size();
  out.signal.fs = signals[static_cast<std::size_t>(ids[0])].fs;
  out.signal.samples.assign(N, 0.0);
  double in_var = 0.0;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= signals.size())
      fail(Errc::invalid_input, "aggregate_regions: region id " + std::to_string(id) + " out of range");
    const auto& s = signals[static_cast<std::size_t>(id)].samples;
    if (s.size() != N) fail(Errc::invalid_input, "aggregate_regions: signal lengths differ");
    for (std::size_t i = 0; i < N; ++i) out.signal.samples[i] += s[i];
    in_var += dsp::variance(s);
  }
  in_var /= static_cast<double>(ids.size());
  const double m = dsp::mean(out.signal.samples);
  const double v = dsp::variance(out.signal.samples);
  if (!(v > 1e-12 * in_var) || !(v > 0.0)) {
    out.flat = true;
    std::fill(out.signal.samples.begin(), out.signal.samples.end(), 0.0);
    return out;
  }
  const double inv = 1.0 / std::sqrt(v);
  for (double& x : out.signal.samples) x = (x - m) * inv;
  return out;
}

PatchMode parse_patch_mode(std::string_view s) {
  if (s == "forehead") return PatchMode::forehead;
  if (s == "cheeks") return PatchMode::cheeks;
  if (s == "combined") return PatchMode::combined;
  fail(Errc::config, "unknown patch mode '" + std::string(s) + "'");
}

std::vector<RegionBox> fixed_patches(const facegeom::LandmarkFrame& lm85, PatchMode mode) {
  const auto lm = facegeom::extend_landmarks(lm85);
  const auto& p = lm.points;
  std::vector<RegionBox> out;
  if (mode != PatchMode::cheeks) {
    // Band between the lifted brow row and the brows, spanning the inner brows.
    double lifted_low = -1e300, brow_top = 1e300;
    for (std::size_t i = 69; i <= 76; ++i) lifted_low = std::max(lifted_low, p[i].y);
    for (std::size_t i = 17; i <= 26; ++i) brow_top = std::min(brow_top, p[i].y);
    out.push_back({0, static_cast<int>(std::ceil(p[19].x)), static_cast<int>(std::ceil(lifted_low)),
                   static_cast<int>(std::floor(p[24].x)) + 1, static_cast<int>(std::ceil(brow_top)) - 1});
  }
  if (mode != PatchMode::forehead) {
    // Below the lower eyelids, above the mouth corners, between jaw and nose wings.
    const double left_eye_low = std::max({p[36].y, p[40].y, p[41].y});
    const double right_eye_low = std::max({p[45].y, p[46].y, p[47].y});
    const double y0 = std::max(left_eye_low, right_eye_low) + 3.0;
    const double y1 = std::min(p[48].y, p[54].y);
    out.push_back({0, static_cast<int>(std::ceil(std::max(p[2].x, p[36].x))), static_cast<int>(std::ceil(y0)),
                   static_cast<int>(std::floor(p[31].x)), static_cast<int>(std::floor(y1))});
    out.push_back({0, static_cast<int>(std::ceil(p[35].x)) + 1, static_cast<int>(std::ceil(y0)),
                   static_cast<int>(std::floor(std::min(p[14].x, p[45].x))) + 1, static_cast<int>(std::floor(y1))});
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].id = static_cast<int>(i);
    if (out[i].x1 <= out[i].x0 || out[i].y1 <= out[i].y0) fail(Errc::degenerate_face, "fixed patch is empty");
  }
  return out;
}

RegionBox face_box(const facegeom::LandmarkFrame& lm85) {
  const auto b = facegeom::bounds(lm85.points);
  return {0, static_cast<int>(std::floor(b.x0)), static_cast<int>(std::floor(b.y0)),
          static_cast<int>(std::ceil(b.x1)) + 1, static_cast<int>(std::ceil(b.y1)) + 1};
}

void write_stats_header(std::ostream& os) {
  os << "window_start,region_id,variance,kfd,dfa_alpha,snr_db,psd_energy,selected\n";
}

void write_stats_rows(std::ostream& os, double window_start, std::span<const RegionStats> stats,
                      std::span<const int> selected) {
  for (const auto& s : stats) {
    const bool sel = std::find(selected.begin(), selected.end(), s.region_id) != selected.end();
    os << window_start << ',' << s.region_id << ',' << s.variance << ',';
    if (s.kfd_defined) os << s.kfd;
    os << ',';
    if (s.dfa_defined) os << s.dfa_alpha;
    os << ',' << s.snr_db << ',' << s.psd_energy << ',' << (sel ? 1 : 0) << '\n';
  }
}

}  // namespace fp::regions
