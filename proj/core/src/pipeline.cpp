#include "facepulse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "facepulse/error.hpp"
#include "facepulse/rppg.hpp"

namespace fp::pipeline {

namespace {

using config::Pipeline;
using config::RegionMode;

regions::PatchMode patch_mode(RegionMode m) {
  switch (m) {
    case RegionMode::forehead: return regions::PatchMode::forehead;
    case RegionMode::cheeks: return regions::PatchMode::cheeks;
    default: return regions::PatchMode::combined;
  }
}

bool is_patch_mode(RegionMode m) {
  return m == RegionMode::forehead || m == RegionMode::cheeks || m == RegionMode::combined;
}

regions::RegionBox clamp_box(regions::RegionBox b, int w, int h) {
  b.x0 = std::clamp(b.x0, 0, w);
  b.x1 = std::clamp(b.x1, 0, w);
  b.y0 = std::clamp(b.y0, 0, h);
  b.y1 = std::clamp(b.y1, 0, h);
  return b;
}

// Regions derived from one frame's 85 landmarks (whole face or fixed patches).
std::vector<regions::RegionBox> landmark_boxes(const facegeom::LandmarkFrame& lm85, RegionMode mode, int w, int h) {
  std::vector<regions::RegionBox> boxes;
  if (is_patch_mode(mode))
    boxes = regions::fixed_patches(lm85, patch_mode(mode));
  else
    boxes = {regions::face_box(lm85)};
  for (auto& b : boxes) b = clamp_box(b, w, h);
  return boxes;
}

std::string frame_stage(std::string_view stage, std::size_t i) {
  return std::string(stage) + " (frame " + std::to_string(i) + ")";
}

Image8 fetch(const io::FrameSource& frames, std::size_t i) {
  try {
    return frames.frame(i);
  } catch (const Error& e) {
    rethrow_in_stage(e, frame_stage("load", i));
  }
}

// Extended landmarks per frame; frames without a usable face stay empty.
std::vector<std::optional<facegeom::LandmarkFrame>> extend_all(const facegeom::LandmarkSequence& lms,
                                                               std::size_t n) {
  std::vector<std::optional<facegeom::LandmarkFrame>> out(n);
  for (std::size_t i = 0; i < n && i < lms.size(); ++i) {
    if (!lms[i]) continue;
    try {
      out[i] = facegeom::extend_landmarks(*lms[i]);
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_face) rethrow_in_stage(e, frame_stage("landmarks", i));
    }
  }
  return out;
}

void build_normalized(const io::FrameSource& frames, const std::vector<std::optional<facegeom::LandmarkFrame>>& lm,
                      std::size_t first, const config::PipelineConfig& cfg, const facegeom::CanonicalMesh& mesh,
                      bool with_moments, TraceSet& ts) {
  const int W = mesh.width(), H = mesh.height();
  if (cfg.pipeline == Pipeline::multi_region && cfg.region_mode == RegionMode::grid) {
    ts.boxes = regions::grid_partition(W, H, cfg.selection.grid_n);
    ts.dmrs = true;
  } else {
    const RegionMode mode = cfg.region_mode == RegionMode::grid ? RegionMode::face : cfg.region_mode;
    ts.boxes = landmark_boxes(mesh.canonical_landmarks(), mode, W, H);
  }
  regions::TraceAccumulator acc(ts.boxes, ts.fs, &mesh, with_moments);
  ImageF warped(W, H);
  const auto warp = [&](std::size_t i) {
    try {
      facegeom::warp_to_canonical(fetch(frames, i), *lm[i], mesh, warped);
    } catch (const Error& e) {
      rethrow_in_stage(e, frame_stage("normalize", i));
    }
  };
  // Frames before the first detection repeat it; later gaps hold the last warp.
  warp(first);
  for (std::size_t i = 0; i < first; ++i) acc.push(warped);
  for (std::size_t i = first; i < lm.size(); ++i) {
    if (lm[i] && i != first) warp(i);
    acc.push(warped);
  }
  ts.traces = std::move(acc).take();
}

void build_source(const io::FrameSource& frames, const std::vector<std::optional<facegeom::LandmarkFrame>>& lm,
                  std::size_t first, const config::PipelineConfig& cfg, TraceSet& ts) {
  const int W = frames.width(), H = frames.height();
  const auto boxes_for = [&](std::size_t i, const std::vector<regions::RegionBox>& fallback) {
    try {
      return landmark_boxes(*lm[i], cfg.region_mode, W, H);
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_face) rethrow_in_stage(e, frame_stage("crop", i));
      if (fallback.empty()) rethrow_in_stage(e, frame_stage("crop", i));
      return fallback;
    }
  };
  std::vector<regions::RegionBox> boxes = boxes_for(first, {});
  ts.boxes = boxes;
  ts.traces.resize(boxes.size());
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    ts.traces[k].fs = ts.fs;
    ts.traces[k].region_id = static_cast<int>(k);
  }
  for (std::size_t i = 0; i < lm.size(); ++i) {
    if (cfg.crop == config::Crop::tracked && lm[i] && i > first) boxes = boxes_for(i, boxes);
    const Image8 img = fetch(frames, i);
    if (img.width != W || img.height != H) fail(Errc::data, frame_stage("load", i) + ": frame size changed");
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      const auto& b = boxes[k];
      auto& t = ts.traces[k];
      if (b.area() == 0) {
        if (t.g.empty()) fail(Errc::degenerate_face, frame_stage("crop", i) + ": region outside the frame");
        t.r.push_back(t.r.back());
        t.g.push_back(t.g.back());
        t.b.push_back(t.b.back());
        continue;
      }
      double s[3] = {0.0, 0.0, 0.0};
      for (int y = b.y0; y < b.y1; ++y) {
        const std::uint8_t* p = &img.data[(static_cast<std::size_t>(y) * W + b.x0) * 3];
        for (int x = b.x0; x < b.x1; ++x, p += 3) {
          s[0] += p[0];
          s[1] += p[1];
          s[2] += p[2];
        }
      }
      const double inv = 1.0 / static_cast<double>(b.area());
      t.r.push_back(s[0] * inv);
      t.g.push_back(s[1] * inv);
      t.b.push_back(s[2] * inv);
    }
  }
}

bool pre_filter(const config::PipelineConfig& cfg) { return cfg.filter != config::FilterStage::post; }
bool post_filter(const config::PipelineConfig& cfg) { return cfg.filter != config::FilterStage::pre; }

// Band-pass fitted to a signal length: the filter may not exceed the data.
dsp::BandpassSpec fitted(dsp::BandpassSpec bp, std::size_t n) {
  if (static_cast<std::size_t>(bp.num_taps) > n) bp.num_taps = static_cast<int>((n - 1) | 1);
  return bp;
}

// Full-length traces after the optional pre-filter (means restored).
std::vector<regions::RgbTrace> prepare(const TraceSet& ts, const config::PipelineConfig& cfg) {
  std::vector<regions::RgbTrace> out = ts.traces;
  if (!pre_filter(cfg)) return out;
  const auto bp = fitted(cfg.bandpass_for(ts.fs), ts.frames());
  for (auto& t : out) {
    for (auto* ch : {&t.r, &t.g, &t.b}) {
      if (!(dsp::variance(*ch) > 0.0)) continue;
      try {
        *ch = dsp::condition(*ch, ts.fs, bp, cfg.detrend, true);
      } catch (const Error& e) {
        rethrow_in_stage(e, "pre-filter (region " + std::to_string(t.region_id) + ")");
      }
    }
  }
  return out;
}

regions::StatsOptions stats_options(const config::PipelineConfig& cfg) {
  regions::StatsOptions o = cfg.stats;
  o.band_lo = cfg.spectral.band_lo;
  o.band_hi = cfg.spectral.band_hi;
  o.beta = cfg.bandpass.beta;
  return o;
}

SelectionPlan plan_from(const TraceSet& ts, const std::vector<regions::RgbTrace>& prepared,
                        const config::PipelineConfig& cfg, const dsp::WindowGrid& grid) {
  SelectionPlan plan;
  std::vector<int> all(ts.traces.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
  const auto opt = stats_options(cfg);
  for (std::size_t w = 0; w < grid.count(); ++w) {
    if (!ts.dmrs) {
      plan.windows.push_back({all, false});
      continue;
    }
    std::vector<regions::RegionStats> stats;
    stats.reserve(prepared.size());
    for (const auto& t : prepared) {
      try {
        stats.push_back(regions::compute_region_stats(t.slice(grid.starts[w], grid.length), opt));
      } catch (const Error&) {
        // A region whose statistics cannot be formed is treated as dead.
        regions::RegionStats dead;
        dead.region_id = t.region_id;
        stats.push_back(dead);
      }
    }
    plan.windows.push_back(regions::select_regions(stats, cfg.selection));
    plan.stats.push_back(std::move(stats));
  }
  return plan;
}

std::vector<double> hann_weights(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return w;
}

dsp::WindowGrid analysis_grid(const TraceSet& ts, const config::PipelineConfig& cfg) {
  if (ts.traces.empty()) fail(Errc::invalid_input, "trace set is empty");
  auto grid = dsp::window_grid(ts.frames(), ts.fs, cfg.spectral.win_s, cfg.spectral.step_s);
  if (grid.count() == 0)
    fail(Errc::empty_series, "video of " + std::to_string(static_cast<double>(ts.frames()) / ts.fs) +
                                 " s is shorter than one analysis window");
  return grid;
}

}  // namespace

TraceSet build_traces(const io::FrameSource& frames, const facegeom::LandmarkSequence& landmarks,
                      const config::PipelineConfig& cfg, const facegeom::CanonicalMesh& mesh, bool with_moments) {
  cfg.validate();
  const std::size_t n = frames.size();
  if (n == 0) fail(Errc::empty_stack, "video has no frames");
  TraceSet ts;
  ts.fs = frames.fs();
  ts.pipeline = cfg.pipeline;
  const auto lm = extend_all(landmarks, n);
  ts.frame_valid.resize(n);
  for (std::size_t i = 0; i < n; ++i) ts.frame_valid[i] = lm[i].has_value();
  const auto first = static_cast<std::size_t>(std::find(ts.frame_valid.begin(), ts.frame_valid.end(), true) -
                                              ts.frame_valid.begin());
  if (first == n) fail(Errc::empty_stack, "no frame has usable landmarks");

  if (cfg.pipeline == Pipeline::improved)
    build_source(frames, lm, first, cfg, ts);
  else
    build_normalized(frames, lm, first, cfg, mesh, with_moments || rppg::requires_pixels(cfg.method), ts);
  return ts;
}

SelectionPlan plan_selection(const TraceSet& ts, const config::PipelineConfig& cfg) {
  cfg.validate();
  return plan_from(ts, prepare(ts, cfg), cfg, analysis_grid(ts, cfg));
}

ExtractResult run_from_traces(const TraceSet& ts, const config::PipelineConfig& cfg, const SelectionPlan* plan,
                              bool diagnostics) {
  cfg.validate();
  const auto grid = analysis_grid(ts, cfg);
  const bool pixels = rppg::requires_pixels(cfg.method);
  if (pixels && ts.traces.front().moments.empty())
    fail(Errc::config, "method 2sr needs traces built with pixel moments");
  const auto prepared = prepare(ts, cfg);
  SelectionPlan local;
  if (!plan) {
    local = plan_from(ts, prepared, cfg, grid);
    plan = &local;
  }
  if (plan->windows.size() != grid.count()) fail(Errc::invalid_input, "selection plan does not match the window grid");

  rppg::MethodOptions opt = cfg.method_options;
  opt.band_lo = cfg.spectral.band_lo;
  opt.band_hi = cfg.spectral.band_hi;
  opt.ica_seed = cfg.seed;
  const double fs = ts.fs;
  const std::size_t L = grid.length;
  const auto post_bp = fitted(cfg.bandpass_for(fs), L);
  const std::string mname(rppg::method_name(cfg.method));

  const auto convert = [&](const regions::RgbTrace& t, const std::string& where) -> std::vector<double> {
    try {
      auto pw = rppg::apply(cfg.method, t, opt);
      if (pw.flat) std::fill(pw.samples.begin(), pw.samples.end(), 0.0);
      return std::move(pw.samples);
    } catch (const Error& e) {
      // A region whose colors cannot be converted contributes nothing.
      if (e.code() == Errc::degenerate_trace) return std::vector<double>(t.size(), 0.0);
      rethrow_in_stage(e, "method " + mname + " (" + where + ")");
    }
  };

  // Whole-trace conversion, computed on first use per region.
  std::vector<std::optional<std::vector<double>>> global(prepared.size());

  ExtractResult out;
  out.frames = ts.frames();
  out.invalid_frames = static_cast<std::size_t>(std::count(ts.frame_valid.begin(), ts.frame_valid.end(), false));
  out.bvp.fs = fs;
  std::vector<double> acc(ts.frames(), 0.0), wsum(ts.frames(), 0.0);
  const auto hann = hann_weights(L);
  std::ostringstream stats_os;
  stats_os.precision(10);
  if (diagnostics && ts.dmrs) regions::write_stats_header(stats_os);

  for (std::size_t w = 0; w < grid.count(); ++w) {
    const std::size_t s0 = grid.starts[w];
    const auto& sel = plan->windows[w];
    WindowDiag d;
    d.start_s = static_cast<double>(w) * cfg.spectral.step_s;
    d.selected = sel.ids;
    d.fallback = sel.fallback;
    d.invalid_frames = static_cast<std::size_t>(
        std::count(ts.frame_valid.begin() + static_cast<std::ptrdiff_t>(s0),
                   ts.frame_valid.begin() + static_cast<std::ptrdiff_t>(s0 + L), false));
    if (diagnostics && ts.dmrs) regions::write_stats_rows(stats_os, d.start_s, plan->stats[w], sel.ids);

    std::vector<dsp::Signal1D> signals(prepared.size());
    const std::string wlabel = "window " + std::to_string(w);
    for (int id : sel.ids) {
      const auto k = static_cast<std::size_t>(id);
      const std::string where = wlabel + ", region " + std::to_string(id);
      std::vector<double> y;
      if (cfg.window_order == config::WindowOrder::pre_conversion) {
        y = convert(prepared[k].slice(s0, L), where);
      } else {
        if (!global[k]) global[k] = convert(prepared[k], "region " + std::to_string(id));
        y.assign(global[k]->begin() + static_cast<std::ptrdiff_t>(s0),
                 global[k]->begin() + static_cast<std::ptrdiff_t>(s0 + L));
      }
      signals[k] = {std::move(y), fs};
    }

    regions::Aggregate agg;
    try {
      agg = regions::aggregate_regions(signals, sel.ids);
    } catch (const Error& e) {
      rethrow_in_stage(e, "aggregate (" + wlabel + ")");
    }
    std::vector<double> y = std::move(agg.signal.samples);
    d.flat = agg.flat;
    if (!d.flat && post_filter(cfg)) {
      try {
        y = dsp::condition(y, fs, post_bp, cfg.detrend, false);
      } catch (const Error& e) {
        rethrow_in_stage(e, "post-filter (" + wlabel + ")");
      }
      const double sd = dsp::stddev(y);
      if (sd > 0.0) {
        const double m = dsp::mean(y);
        for (double& v : y) v = (v - m) / sd;
      } else {
        d.flat = true;
      }
    }
    const bool gap = static_cast<double>(d.invalid_frames) > cfg.spectral.gaps.max_invalid_frac * static_cast<double>(L);
    if (!d.flat && !gap) d.bpm = spectral::estimate_hr(y, fs, cfg.spectral);

    if (!d.flat)
      for (std::size_t i = 0; i < L; ++i) {
        acc[s0 + i] += hann[i] * y[i];
        wsum[s0 + i] += hann[i];
      }
    out.hr.times.push_back(d.start_s);
    out.hr.bpm.push_back(d.bpm.value_or(0.0));
    out.hr.valid.push_back(d.bpm.has_value());
    out.windows.push_back(std::move(d));
  }
  spectral::hold_fill(out.hr);
  out.bvp.samples.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out.bvp.samples[i] = wsum[i] > 0.0 ? acc[i] / wsum[i] : 0.0;
  if (diagnostics && ts.dmrs) out.stats_csv = stats_os.str();
  return out;
}

ExtractResult run_extract(const io::FrameSource& frames, const facegeom::LandmarkSequence& landmarks,
                          const config::PipelineConfig& cfg, const facegeom::CanonicalMesh& mesh, bool diagnostics) {
  const auto ts = build_traces(frames, landmarks, cfg, mesh);
  return run_from_traces(ts, cfg, nullptr, diagnostics);
}

void write_bvp_csv(std::ostream& os, const dsp::Signal1D& bvp) {
  const auto old = os.precision(10);
  os << "t,value\n";
  for (std::size_t i = 0; i < bvp.size(); ++i) os << static_cast<double>(i) / bvp.fs << ',' << bvp.samples[i] << '\n';
  os.precision(old);
}

void write_hr_csv(std::ostream& os, const spectral::HrSeries& hr) {
  const auto old = os.precision(10);
  os << "t,bpm,valid\n";
  for (std::size_t i = 0; i < hr.size(); ++i)
    os << hr.times[i] << ',' << hr.bpm[i] << ',' << (hr.valid[i] ? 1 : 0) << '\n';
  os.precision(old);
}

void write_windows_csv(std::ostream& os, const std::vector<WindowDiag>& windows) {
  const auto old = os.precision(10);
  os << "window_start,selected,fallback,flat,invalid_frames,bpm\n";
  for (const auto& d : windows) {
    os << d.start_s << ',';
    for (std::size_t i = 0; i < d.selected.size(); ++i) os << (i ? " " : "") << d.selected[i];
    os << ',' << (d.fallback ? 1 : 0) << ',' << (d.flat ? 1 : 0) << ',' << d.invalid_frames << ',';
    if (d.bpm) os << *d.bpm;
    os << '\n';
  }
  os.precision(old);
}

}  // namespace fp::pipeline
