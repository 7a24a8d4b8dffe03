#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "facepulse/config.hpp"
#include "facepulse/error.hpp"
#include "facepulse/evaluate.hpp"
#include "facepulse/io.hpp"
#include "facepulse/pipeline.hpp"
#include "facepulse/plots.hpp"
#include "facepulse/synth.hpp"

namespace fp::cli {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

config::PipelineConfig resolve(const PipelineFlags& f, bool single_method) {
  auto cfg = f.config.empty() ? config::PipelineConfig{} : config::load_config(f.config);
  if (!f.pipeline.empty()) cfg.pipeline = config::parse_pipeline(f.pipeline);
  if (!f.region_mode.empty()) cfg.region_mode = config::parse_region_mode(f.region_mode);
  if (!f.crop.empty()) cfg.crop = config::parse_crop(f.crop);
  if (f.grid) cfg.selection.grid_n = *f.grid;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.method.empty()) {
    const auto names = split_list(f.method);
    if (single_method && names.size() != 1) fail(Errc::config, "extract takes exactly one --method");
    if (!names.empty()) cfg.method = rppg::parse_method(names.front());
  }
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(Errc::data, "cannot write " + p.string());
  out << text;
}

template <class F>
void write_with(const fs::path& p, F&& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(Errc::data, "cannot write " + p.string());
  body(out);
}

std::string two_digits(int i, int n) {
  const int width = std::max(2, static_cast<int>(std::to_string(n).size()));
  std::ostringstream ss;
  ss << std::setw(width) << std::setfill('0') << i;
  return ss.str();
}

}  // namespace

int run_config(const PipelineFlags& f, const std::string& out) {
  const auto cfg = resolve(f, true);
  if (out.empty())
    std::cout << config::to_json(cfg) << '\n';
  else
    config::save_config(out, cfg);
  return 0;
}

int run_extract(const ExtractArgs& a) {
  const auto cfg = resolve(a.flags, true);
  io::VideoEntry v;
  v.id = fs::path(a.frames).stem().string();
  v.frames = a.frames;
  v.landmarks = a.landmarks;
  const auto src = evaluate::open_video(v);
  const auto lms = io::load_landmarks(a.landmarks, src->size());
  const auto res = pipeline::run_extract(*src, lms, cfg, facegeom::CanonicalMesh::builtin(), true);

  const fs::path out = a.out.empty() ? fs::path(".") : fs::path(a.out);
  fs::create_directories(out);
  write_with(out / "bvp.csv", [&](std::ostream& os) { pipeline::write_bvp_csv(os, res.bvp); });
  write_with(out / "hr.csv", [&](std::ostream& os) { pipeline::write_hr_csv(os, res.hr); });
  write_with(out / "windows.csv", [&](std::ostream& os) { pipeline::write_windows_csv(os, res.windows); });
  if (!res.stats_csv.empty()) write_text(out / "stats.csv", res.stats_csv);
  config::save_config(out / "config.json", cfg);

  std::size_t valid = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < res.hr.size(); ++i)
    if (res.hr.valid[i]) ++valid, sum += res.hr.bpm[i];
  std::cout << res.frames << " frames (" << res.invalid_frames << " without landmarks), " << res.hr.size()
            << " windows, " << valid << " valid";
  if (valid) std::cout << ", mean " << std::fixed << std::setprecision(1) << sum / valid << " bpm";
  std::cout << '\n';

  if (!a.reference.empty()) {
    if (!(a.reference_fs > 0.0)) fail(Errc::config, "--reference needs --reference-fs");
    const auto kind = a.reference_kind == "ecg" ? spectral::ReferenceKind::ecg : spectral::ReferenceKind::bvp;
    if (a.reference_kind != "ecg" && a.reference_kind != "bvp")
      fail(Errc::config, "--reference-kind must be bvp or ecg");
    if (kind == spectral::ReferenceKind::ecg && !a.ecg_channel) fail(Errc::config, "ECG reference needs --ecg-channel");
    const auto ref = io::load_reference(a.reference, a.reference_fs, a.ecg_channel.value_or(0));
    const auto ref_hr = spectral::reference_hr(ref, kind, cfg.spectral, src->fs());
    eval::AlignmentParams align;
    try {
      align = eval::estimate_alignment(ref_hr, res.hr, cfg.max_lag_s);
    } catch (const Error&) {
      align.aligned = false;
    }
    auto m = eval::compute_metrics(ref_hr, res.hr, align);
    m.video_id = v.id;
    m.method = rppg::method_name(cfg.method);
    m.pipeline = config::to_string(cfg.pipeline);
    m.grid_n = cfg.selection.grid_n;
    write_with(out / "metrics.csv", [&](std::ostream& os) { eval::write_reports_csv(os, std::span(&m, 1)); });
    write_with(out / "series.csv",
               [&](std::ostream& os) { eval::write_series_csv(os, ref_hr, res.hr, align.lag_s); });
    std::cout << "MAE " << m.mae << " bpm, RMSE " << m.rmse << " bpm, PCC ";
    if (m.pcc_defined)
      std::cout << m.pcc;
    else
      std::cout << "n/a";
    std::cout << ", lag " << align.lag_s << " s\n";
  }
  return 0;
}

int run_evaluate(const EvaluateArgs& a) {
  const auto cfg = resolve(a.flags, false);
  evaluate::EvaluateOptions opt;
  for (const auto& name : split_list(a.flags.method)) opt.methods.push_back(rppg::parse_method(name));
  opt.grid_sweep = a.grid_sweep;
  opt.jobs = a.jobs;
  opt.out = a.out.empty() ? fs::path("run") : fs::path(a.out);
  opt.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
  const auto dataset = io::load_dataset(a.dataset);
  const auto res = evaluate::run_evaluate(dataset, cfg, opt);
  eval::write_markdown_table(std::cout, res.aggregate, res.keys);
  std::cout << res.reports.size() << " reports, " << res.exclusions.size() << " exclusions -> " << opt.out.string()
            << '\n';
  if (a.plots && !res.reports.empty()) plots::run_plots(opt.out);
  return res.exit_code();
}

int run_synth(const SynthArgs& a) {
  if (a.suite < 1) fail(Errc::config, "--suite must be at least 1");
  if (a.frames != "spec" && a.frames != "png" && a.frames != "raw")
    fail(Errc::config, "--frames must be spec, png or raw");
  if (!(a.hr_min >= 45.0 && a.hr_max <= 240.0 && a.hr_min <= a.hr_max))
    fail(Errc::config, "HR range must lie within 45-240 bpm");
  const fs::path out = a.out.empty() ? fs::path("synthetic") : fs::path(a.out);
  fs::create_directories(out);

  // Per-video HR drawn from the suite seed; each video renders from seed + i.
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> draw(a.hr_min, a.hr_max);
  io::DatasetDescriptor d;
  d.name = "synthetic";
  d.root = out;
  for (int i = 1; i <= a.suite; ++i) {
    config::SynthFile f;
    auto& s = f.spec;
    s.duration_s = a.duration;
    s.fs = a.fs;
    const double bpm = a.hr ? *a.hr : std::round(draw(rng) * 10.0) / 10.0;
    s.hr = {{0.0, bpm}};
    s.amplitude = a.amplitude;
    s.noise_sigma = a.noise;
    s.region_noise_sigma = a.region_noise;
    s.vx = a.vx;
    s.vy = a.vy;
    s.landmark_jitter = a.jitter;
    s.rotation_amp_deg = a.rotation_deg;
    s.rotation_hz = a.rotation_hz;
    s.injected_regions = a.injected;
    f.seed = a.seed + static_cast<std::uint64_t>(i);
    const std::string id = "v" + two_digits(i, a.suite);
    const synth::SyntheticVideo video(s, f.seed);

    io::VideoEntry e;
    e.id = id;
    e.scenario = a.scenario;
    e.reference_kind = spectral::ReferenceKind::bvp;
    e.reference_fs = s.reference_fs;
    e.landmarks = out / (id + "_landmarks.csv");
    e.reference = out / (id + "_reference.csv");
    if (a.frames == "spec") {
      e.frames = out / (id + ".json");
      config::save_synth(e.frames, f);
    } else if (a.frames == "png") {
      e.frames = out / id;
      io::write_frame_dir(e.frames, video);
    } else {
      e.frames = out / (id + ".raw");
      io::write_raw(e.frames, video);
    }
    io::write_landmarks(e.landmarks, video.landmarks());
    io::write_reference(e.reference, video.reference());
    d.videos.push_back(e);
    std::cerr << id << ": " << bpm << " bpm\n";
  }
  io::save_dataset(out / "dataset.json", d);
  std::cout << a.suite << " videos -> " << (out / "dataset.json").string() << '\n';
  return 0;
}

int run_plots(const PlotsArgs& a) {
  const auto files = plots::run_plots(a.run, {a.log_scale});
  for (const auto& f : files) std::cout << f.string() << '\n';
  return 0;
}

}  // namespace fp::cli
