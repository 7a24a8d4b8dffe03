#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "facepulse/config.hpp"
#include "facepulse/eval.hpp"
#include "facepulse/io.hpp"
#include "facepulse/rppg.hpp"

namespace fp::evaluate {

/// Frames of a dataset entry: a frame directory, a raw container, or a
/// synthetic description (*.json) rendered on demand.
std::unique_ptr<io::FrameSource> open_video(const io::VideoEntry& v);

inline constexpr int kSweepMin = 6;
inline constexpr int kSweepMax = 11;

struct EvaluateOptions {
  std::vector<rppg::Method> methods;  // empty: the config's method
  bool grid_sweep = false;            // n = 6..11, multi_region only
  unsigned jobs = 1;
  std::filesystem::path out;  // empty: nothing is written
  /// Progress and exclusion messages, always called from one thread at a time.
  std::function<void(const std::string&)> log;
};

struct Exclusion {
  std::string video_id;
  std::string method;  // empty: the whole video
  std::string reason;
};

struct LagRecord {
  std::string video_id;
  std::string method;
  int grid_n = 0;
  double lag_s = 0.0;
  bool estimated = false;
};

struct SeriesRecord {
  std::string video_id;
  std::string method;
  int grid_n = 0;
  spectral::HrSeries ref, est;
  double lag_s = 0.0;
};

struct EvaluateResult {
  std::vector<eval::MetricsReport> reports;
  std::vector<SeriesRecord> series;  // one per report, same order
  std::vector<eval::GroupBy> keys;
  std::vector<eval::MetricsReport> aggregate;
  std::vector<eval::MetricsReport> by_scenario;  // empty without scenario tags
  std::vector<Exclusion> exclusions;
  std::vector<LagRecord> lags;

  /// 0 success, 3 nothing could be evaluated, 4 partial.
  int exit_code() const noexcept;
};

/// Per video: traces once per grid size, every method on them, reference HR
/// on the video's window grid, alignment, metrics. Failing videos are
/// excluded and counted; configuration problems throw Errc::config before
/// any video is touched.
EvaluateResult run_evaluate(const io::DatasetDescriptor& dataset, const config::PipelineConfig& cfg,
                            const EvaluateOptions& opt);

/// Writes reports.csv, aggregate.csv, aggregate_scenario.csv (when tagged),
/// summary.json, summary.md, config.json and series/<video>__<method>__<n>.csv.
void write_run(const std::filesystem::path& dir, const io::DatasetDescriptor& dataset,
               const config::PipelineConfig& cfg, const EvaluateResult& result);

}  // namespace fp::evaluate
