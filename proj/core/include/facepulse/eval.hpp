#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "facepulse/spectral.hpp"

namespace fp::eval {

enum class ScaleMode { none, znorm };

struct AlignmentParams {
  double lag_s = 0.0;  // applied to the extracted series; ref[i] pairs with est[i - lag]
  ScaleMode scale_mode = ScaleMode::none;
  double max_lag_s = 3.0;
  bool aligned = true;  // false when estimation failed and metrics ran unaligned
  double ncc = 0.0;
  bool informative = true;  // false: peak correlation too weak, lag left at 0
};

/// Integer-step lag maximizing the normalized cross-correlation of the jointly
/// valid windows. Ties go to the smallest |lag|; degenerate (constant) series,
/// or a peak correlation below 0.5, give lag 0. Throws Errc::no_alignment with fewer than `min_common` pairs.
AlignmentParams estimate_alignment(const spectral::HrSeries& ref, const spectral::HrSeries& est,
                                   double max_lag_s = 3.0, std::size_t min_common = 10);

double median(std::vector<double> v);

/// Dataset mode: median of the informative per-video lags, snapped to `step`.
AlignmentParams dataset_alignment(std::span<const AlignmentParams> per_video, double step = 1.0);

struct PairedSeries {
  std::vector<double> ref, est;
};
PairedSeries paired_windows(const spectral::HrSeries& ref, const spectral::HrSeries& est, double lag_s);

struct MetricsReport {
  std::string video_id;
  std::string scenario;
  std::string method;
  std::string pipeline;
  int grid_n = 0;
  double mae = 0.0;
  double mae_sd = 0.0;
  double rmse = 0.0;
  double pcc = 0.0;
  bool pcc_defined = false;
  std::size_t windows = 0;
  double lag_s = 0.0;
  bool aligned = true;
  std::size_t videos = 1;  // aggregate rows: number of reports folded in
};

/// Throws Errc::insufficient_data below 3 jointly valid windows.
MetricsReport compute_metrics(const spectral::HrSeries& ref, const spectral::HrSeries& est,
                              const AlignmentParams& align);

struct BasicMetrics {
  double mae, mae_sd, rmse, pcc;
  bool pcc_defined;
};
BasicMetrics metrics_of(std::span<const double> ref, std::span<const double> est);

double pearson(std::span<const double> a, std::span<const double> b, bool* defined = nullptr);

enum class GroupBy { none, scenario, grid_n, method };

/// Mean MAE, population SD of per-video MAE, mean RMSE, median of defined PCCs.
/// Groups keyed by the given fields in order; rows sorted by key.
std::vector<MetricsReport> aggregate_dataset(std::span<const MetricsReport> reports, std::span<const GroupBy> keys);
std::vector<MetricsReport> aggregate_dataset(std::span<const MetricsReport> reports, GroupBy key = GroupBy::none);

std::string grid_label(int n);  // "9x9"

inline constexpr int kReportSchemaVersion = 1;

void write_reports_csv(std::ostream& os, std::span<const MetricsReport> rows);
void write_aggregate_csv(std::ostream& os, std::span<const MetricsReport> rows, std::span<const GroupBy> keys);
/// Markdown table with the columns | Group | MAE ± SD | PCC | RMSE |.
void write_markdown_table(std::ostream& os, std::span<const MetricsReport> rows, std::span<const GroupBy> keys);
std::string group_label(const MetricsReport& r, std::span<const GroupBy> keys, bool pretty = false);

void write_series_csv(std::ostream& os, const spectral::HrSeries& ref, const spectral::HrSeries& est, double lag_s);

}  // namespace fp::eval
