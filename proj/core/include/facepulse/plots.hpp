#pragma once

#include <filesystem>
#include <vector>

namespace fp::plots {

struct PlotOptions {
  bool log_scale = false;  // MAE box plot on a log10 axis
};

/// Reads a finished evaluation directory (reports.csv, series/) and writes
/// plots/hr_<video>.svg per video plus plots/mae_box.svg. Output is a pure
/// function of the run files. Throws Errc::data for an empty or incomplete run.
std::vector<std::filesystem::path> run_plots(const std::filesystem::path& run_dir, const PlotOptions& opt = {});

/// Quartiles by linear interpolation between order statistics.
struct BoxStats {
  double q1, median, q3, lo_whisker, hi_whisker;
  std::vector<double> outliers;
};
BoxStats box_stats(std::vector<double> v);

}  // namespace fp::plots
