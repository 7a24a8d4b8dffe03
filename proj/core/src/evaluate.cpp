#include "facepulse/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <nlohmann/json.hpp>

#include "facepulse/error.hpp"
#include "facepulse/pipeline.hpp"
#include "facepulse/synth.hpp"

namespace fp::evaluate {

namespace {

namespace fs = std::filesystem;

// Everything one video contributes before alignment.
struct VideoRun {
  std::optional<spectral::HrSeries> ref;
  struct Est {
    rppg::Method method;
    int grid_n;
    spectral::HrSeries hr;
  };
  std::vector<Est> est;
  std::vector<Exclusion> exclusions;
};

std::vector<int> grid_sizes(const config::PipelineConfig& cfg, const EvaluateOptions& opt) {
  if (!opt.grid_sweep) return {cfg.selection.grid_n};
  std::vector<int> g;
  for (int n = kSweepMin; n <= kSweepMax; ++n) g.push_back(n);
  return g;
}

void check_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) fail(Errc::data, std::string(what) + " not found: " + p.string());
}

VideoRun run_video(const io::VideoEntry& v, const config::PipelineConfig& cfg, const std::vector<rppg::Method>& methods,
                   const std::vector<int>& grids) {
  VideoRun run;
  try {
    check_exists(v.frames, "frames");
    check_exists(v.landmarks, "landmarks");
    check_exists(v.reference, "reference");
    if (v.reference_kind == spectral::ReferenceKind::ecg && !v.ecg_channel)
      fail(Errc::data, "ECG reference needs an explicit ecg_channel");
    const auto src = open_video(v);
    const auto lms = io::load_landmarks(v.landmarks, src->size());
    const auto ref = io::load_reference(v.reference, v.reference_fs, v.ecg_channel.value_or(0));
    run.ref = spectral::reference_hr(ref, v.reference_kind, cfg.spectral, src->fs());

    const bool pixels = std::any_of(methods.begin(), methods.end(), rppg::requires_pixels);
    for (int n : grids) {
      auto cg = cfg;
      cg.selection.grid_n = n;
      const auto ts = pipeline::build_traces(*src, lms, cg, facegeom::CanonicalMesh::builtin(), pixels);
      const auto plan = pipeline::plan_selection(ts, cg);
      for (auto m : methods) {
        auto cm = cg;
        cm.method = m;
        try {
          run.est.push_back({m, n, pipeline::run_from_traces(ts, cm, &plan).hr});
        } catch (const Error& e) {
          run.exclusions.push_back({v.id, std::string(rppg::method_name(m)), e.what()});
        }
      }
    }
  } catch (const Error& e) {
    run.ref.reset();
    run.est.clear();
    run.exclusions = {{v.id, "", e.what()}};
  } catch (const std::exception& e) {
    run.ref.reset();
    run.est.clear();
    run.exclusions = {{v.id, "", std::string("unexpected failure: ") + e.what()}};
  }
  return run;
}

std::string series_name(const SeriesRecord& s) {
  return s.video_id + "__" + s.method + "__" + eval::grid_label(s.grid_n) + ".csv";
}

void write_file(const fs::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(Errc::data, "cannot write " + p.string());
  body(out);
  if (!out) fail(Errc::data, "write failed: " + p.string());
}

}  // namespace

std::unique_ptr<io::FrameSource> open_video(const io::VideoEntry& v) {
  check_exists(v.frames, "frames");
  if (v.frames.extension() == ".json") {
    const auto f = config::load_synth(v.frames);
    return std::make_unique<synth::SyntheticVideo>(f.spec, f.seed);
  }
  return io::open_frames(v.frames);
}

int EvaluateResult::exit_code() const noexcept {
  if (reports.empty()) return 3;
  return exclusions.empty() ? 0 : 4;
}

EvaluateResult run_evaluate(const io::DatasetDescriptor& dataset, const config::PipelineConfig& cfg,
                            const EvaluateOptions& opt) {
  std::vector<rppg::Method> methods = opt.methods.empty() ? std::vector<rppg::Method>{cfg.method} : opt.methods;
  for (auto m : methods) {
    auto c = cfg;
    c.method = m;
    c.validate();
  }
  if (opt.grid_sweep && !(cfg.pipeline == config::Pipeline::multi_region && cfg.region_mode == config::RegionMode::grid))
    fail(Errc::config, "grid sweep needs the multi_region pipeline with grid regions");
  const auto grids = grid_sizes(cfg, opt);
  if (dataset.videos.empty()) fail(Errc::data, "dataset '" + dataset.name + "' has no videos");

  std::mutex log_mu;
  const auto log = [&](const std::string& msg) {
    if (!opt.log) return;
    std::lock_guard lock(log_mu);
    opt.log(msg);
  };

  // Videos fan out over the workers; results land in their own slots.
  std::vector<VideoRun> runs(dataset.videos.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const auto& v = dataset.videos[i];
      runs[i] = run_video(v, cfg, methods, grids);
      log(v.id + ": " + (runs[i].ref ? "done" : "excluded"));
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(runs.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EvaluateResult res;
  struct Pending {
    std::size_t video;
    const VideoRun::Est* est;
    eval::AlignmentParams align;
  };
  std::vector<Pending> pending;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& x : runs[i].exclusions) res.exclusions.push_back(x);
    if (!runs[i].ref) continue;
    for (const auto& e : runs[i].est) {
      eval::AlignmentParams a;
      a.max_lag_s = cfg.max_lag_s;
      if (dataset.alignment_lag_s) {
        a.lag_s = *dataset.alignment_lag_s;
      } else {
        try {
          a = eval::estimate_alignment(*runs[i].ref, e.hr, cfg.max_lag_s);
        } catch (const Error&) {
          a.aligned = false;
        }
      }
      pending.push_back({i, &e, a});
    }
  }

  // Dataset mode: one lag per (method, grid), the median of the video lags.
  if (!dataset.alignment_lag_s && cfg.alignment == config::AlignmentMode::dataset) {
    std::map<std::pair<int, int>, std::vector<eval::AlignmentParams>> groups;
    for (const auto& p : pending)
      if (p.align.aligned) groups[{static_cast<int>(p.est->method), p.est->grid_n}].push_back(p.align);
    for (auto& p : pending) {
      const auto it = groups.find({static_cast<int>(p.est->method), p.est->grid_n});
      if (it == groups.end()) continue;
      p.align = eval::dataset_alignment(it->second, cfg.spectral.step_s);
      p.align.max_lag_s = cfg.max_lag_s;
    }
  }

  for (const auto& p : pending) {
    const auto& v = dataset.videos[p.video];
    const std::string mname(rppg::method_name(p.est->method));
    res.lags.push_back({v.id, mname, p.est->grid_n, p.align.lag_s, !dataset.alignment_lag_s.has_value()});
    try {
      auto r = eval::compute_metrics(*runs[p.video].ref, p.est->hr, p.align);
      r.video_id = v.id;
      r.scenario = v.scenario;
      r.method = mname;
      r.pipeline = std::string(config::to_string(cfg.pipeline));
      r.grid_n = p.est->grid_n;
      res.reports.push_back(std::move(r));
      res.series.push_back({v.id, mname, p.est->grid_n, *runs[p.video].ref, p.est->hr, p.align.lag_s});
    } catch (const Error& e) {
      res.exclusions.push_back({v.id, mname, e.what()});
    }
  }
  for (const auto& x : res.exclusions)
    log("excluded " + x.video_id + (x.method.empty() ? "" : " [" + x.method + "]") + ": " + x.reason);

  if (!res.reports.empty()) {
    res.keys = opt.grid_sweep ? std::vector<eval::GroupBy>{eval::GroupBy::method, eval::GroupBy::grid_n}
                              : std::vector<eval::GroupBy>{eval::GroupBy::method};
    res.aggregate = eval::aggregate_dataset(res.reports, res.keys);
    const bool tagged = std::any_of(res.reports.begin(), res.reports.end(),
                                    [](const eval::MetricsReport& r) { return !r.scenario.empty(); });
    if (tagged) {
      const eval::GroupBy sk[] = {eval::GroupBy::method, eval::GroupBy::scenario};
      res.by_scenario = eval::aggregate_dataset(res.reports, sk);
    }
  }
  if (!opt.out.empty()) write_run(opt.out, dataset, cfg, res);
  return res;
}

void write_run(const fs::path& dir, const io::DatasetDescriptor& dataset, const config::PipelineConfig& cfg,
               const EvaluateResult& res) {
  fs::create_directories(dir / "series");
  write_file(dir / "reports.csv", [&](std::ostream& os) { eval::write_reports_csv(os, res.reports); });
  write_file(dir / "aggregate.csv",
             [&](std::ostream& os) { eval::write_aggregate_csv(os, res.aggregate, res.keys); });
  const eval::GroupBy sk[] = {eval::GroupBy::method, eval::GroupBy::scenario};
  if (!res.by_scenario.empty())
    write_file(dir / "aggregate_scenario.csv",
               [&](std::ostream& os) { eval::write_aggregate_csv(os, res.by_scenario, sk); });
  for (const auto& s : res.series)
    write_file(dir / "series" / series_name(s),
               [&](std::ostream& os) { eval::write_series_csv(os, s.ref, s.est, s.lag_s); });
  write_file(dir / "config.json", [&](std::ostream& os) { os << config::to_json(cfg) << '\n'; });

  write_file(dir / "summary.md", [&](std::ostream& os) {
    os << "# " << dataset.name << " - " << config::to_string(cfg.pipeline) << "\n\n";
    if (!res.aggregate.empty()) eval::write_markdown_table(os, res.aggregate, res.keys);
    if (!res.by_scenario.empty()) {
      os << "\n";
      eval::write_markdown_table(os, res.by_scenario, sk);
    }
    os << "\n" << res.reports.size() << " reports, " << res.exclusions.size() << " exclusions.\n";
  });

  nlohmann::json j;
  j["schema_version"] = eval::kReportSchemaVersion;
  j["dataset"] = dataset.name;
  j["pipeline"] = config::to_string(cfg.pipeline);
  j["sd_definition"] = "population standard deviation of per-window absolute errors (per video) and of per-video MAE (aggregates)";
  j["reports"] = res.reports.size();
  j["exit_code"] = res.exit_code();
  auto& ex = j["exclusions"] = nlohmann::json::array();
  for (const auto& x : res.exclusions) ex.push_back({{"video_id", x.video_id}, {"method", x.method}, {"reason", x.reason}});
  auto& lags = j["lags"] = nlohmann::json::array();
  for (const auto& l : res.lags)
    lags.push_back({{"video_id", l.video_id}, {"method", l.method}, {"grid_n", l.grid_n}, {"lag_s", l.lag_s},
                    {"estimated", l.estimated}});
  auto& agg = j["aggregate"] = nlohmann::json::array();
  for (const auto& r : res.aggregate)
    agg.push_back({{"group", eval::group_label(r, res.keys)},
                   {"videos", r.videos},
                   {"mae_bpm", r.mae},
                   {"mae_sd_bpm", r.mae_sd},
                   {"rmse_bpm", r.rmse},
                   {"pcc_median", r.pcc_defined ? nlohmann::json(r.pcc) : nlohmann::json(nullptr)}});
  write_file(dir / "summary.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

}  // namespace fp::evaluate
