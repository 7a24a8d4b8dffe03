#include "facepulse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <tuple>

#include "facepulse/error.hpp"

namespace fp::eval {

namespace {

// Below this peak correlation the envelopes carry no timing information
// (e.g. a constant heart rate, where only estimator noise varies).
constexpr double kMinAlignmentNcc = 0.5;

long lag_steps(double lag_s, double step) { return step > 0.0 ? std::lround(lag_s / step) : 0; }

double step_of(const spectral::HrSeries& a, const spectral::HrSeries& b) {
  const double s = a.step() > 0.0 ? a.step() : b.step();
  return s > 0.0 ? s : 1.0;
}

double pop_sd(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b, bool* defined) {
  const std::size_t n = std::min(a.size(), b.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const bool ok = n >= 2 && saa > 0.0 && sbb > 0.0;
  if (defined) *defined = ok;
  return ok ? std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0) : 0.0;
}

PairedSeries paired_windows(const spectral::HrSeries& ref, const spectral::HrSeries& est, double lag_s) {
  const long L = lag_steps(lag_s, step_of(ref, est));
  PairedSeries p;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const long j = static_cast<long>(i) - L;
    if (j < 0 || j >= static_cast<long>(est.size())) continue;
    if (!ref.valid[i] || !est.valid[static_cast<std::size_t>(j)]) continue;
    p.ref.push_back(ref.bpm[i]);
    p.est.push_back(est.bpm[static_cast<std::size_t>(j)]);
  }
  return p;
}

AlignmentParams estimate_alignment(const spectral::HrSeries& ref, const spectral::HrSeries& est, double max_lag_s,
                                   std::size_t min_common) {
  AlignmentParams out;
  out.max_lag_s = max_lag_s;
  const double step = step_of(ref, est);
  const long K = static_cast<long>(std::floor(max_lag_s / step + 1e-9));
  bool any = false;
  bool found = false;
  double best = -2.0;
  // Visit 0, -1, +1, -2, +2, ... so strict improvement keeps the smallest |lag|.
  for (long a = 0; a <= K; ++a) {
    for (long L : {-a, a}) {
      if (a == 0 && L != 0) continue;
      const auto p = paired_windows(ref, est, static_cast<double>(L) * step);
      if (p.ref.size() < min_common) continue;
      any = true;
      bool defined = false;
      const double r = pearson(p.ref, p.est, &defined);
      if (defined && r > best + 1e-12) {
        best = r;
        out.lag_s = static_cast<double>(L) * step;
        found = true;
      }
      if (a == 0) break;
    }
  }
  if (!any)
    fail(Errc::no_alignment, "fewer than " + std::to_string(min_common) + " jointly valid windows at every lag");
  if (!found || best < kMinAlignmentNcc) {
    out.lag_s = 0.0;
    out.ncc = found ? best : 0.0;
    out.informative = false;
  } else {
    out.ncc = best;
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

AlignmentParams dataset_alignment(std::span<const AlignmentParams> per_video, double step) {
  AlignmentParams out;
  std::vector<double> lags;
  for (const auto& a : per_video)
    if (a.aligned && a.informative) lags.push_back(a.lag_s);
  if (!per_video.empty()) out.max_lag_s = per_video.front().max_lag_s;
  // Snap to the window step; an even count's midpoint rounds toward zero.
  const double q = median(lags) / step;
  out.lag_s = (q > 0.0 ? std::ceil(q - 0.5) : std::floor(q + 0.5)) * step;
  out.aligned = std::any_of(per_video.begin(), per_video.end(), [](const AlignmentParams& a) { return a.aligned; });
  out.informative = !lags.empty();
  return out;
}

BasicMetrics metrics_of(std::span<const double> ref, std::span<const double> est) {
  const std::size_t n = ref.size();
  std::vector<double> abs_err(n);
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = est[i] - ref[i];
    abs_err[i] = std::abs(d);
    ae += abs_err[i];
    se += d * d;
  }
  BasicMetrics m{};
  m.mae = ae / static_cast<double>(n);
  m.rmse = std::sqrt(se / static_cast<double>(n));
  m.mae_sd = pop_sd(abs_err);
  m.pcc = pearson(ref, est, &m.pcc_defined);
  return m;
}

MetricsReport compute_metrics(const spectral::HrSeries& ref, const spectral::HrSeries& est,
                              const AlignmentParams& align) {
  const auto p = paired_windows(ref, est, align.lag_s);
  if (p.ref.size() < 3)
    fail(Errc::insufficient_data, "only " + std::to_string(p.ref.size()) + " jointly valid windows");
  const auto m = metrics_of(p.ref, p.est);
  MetricsReport r;
  r.mae = m.mae;
  r.mae_sd = m.mae_sd;
  r.rmse = m.rmse;
  r.pcc = m.pcc;
  r.pcc_defined = m.pcc_defined;
  r.windows = p.ref.size();
  r.lag_s = align.lag_s;
  r.aligned = align.aligned;
  return r;
}

std::string grid_label(int n) { return std::to_string(n) + "x" + std::to_string(n); }

std::string group_label(const MetricsReport& r, std::span<const GroupBy> keys, bool pretty) {
  std::string out;
  for (GroupBy k : keys) {
    std::string part;
    switch (k) {
      case GroupBy::none: part = "all"; break;
      case GroupBy::scenario: part = r.scenario; break;
      case GroupBy::method: part = r.method; break;
      case GroupBy::grid_n:
        part = pretty ? std::to_string(r.grid_n) + " x " + std::to_string(r.grid_n) : grid_label(r.grid_n);
        break;
    }
    if (!out.empty()) out += pretty ? " / " : "|";
    out += part;
  }
  return out.empty() ? "all" : out;
}

std::vector<MetricsReport> aggregate_dataset(std::span<const MetricsReport> reports, std::span<const GroupBy> keys) {
  if (reports.empty()) fail(Errc::invalid_input, "aggregate_dataset: no reports");
  using Key = std::tuple<std::string, int, std::string>;
  const auto key_of = [&](const MetricsReport& r) {
    Key k{"", 0, ""};
    for (GroupBy g : keys) {
      if (g == GroupBy::scenario) std::get<0>(k) = r.scenario;
      if (g == GroupBy::grid_n) std::get<1>(k) = r.grid_n;
      if (g == GroupBy::method) std::get<2>(k) = r.method;
    }
    return k;
  };
  // Method first, then scenario, then grid, matching the table layouts.
  const auto order = [](const Key& a, const Key& b) {
    return std::tie(std::get<2>(a), std::get<0>(a), std::get<1>(a)) <
           std::tie(std::get<2>(b), std::get<0>(b), std::get<1>(b));
  };
  std::map<Key, std::vector<const MetricsReport*>, decltype(order)> groups(order);
  for (const auto& r : reports) groups[key_of(r)].push_back(&r);

  std::vector<MetricsReport> out;
  for (const auto& [key, rows] : groups) {
    MetricsReport a;
    const auto uniform = [&](auto field) {
      const auto v = field(*rows.front());
      for (const auto* r : rows)
        if (field(*r) != v) return decltype(v){};
      return v;
    };
    a.video_id = "all";
    a.scenario = uniform([](const MetricsReport& r) { return r.scenario; });
    a.method = uniform([](const MetricsReport& r) { return r.method; });
    a.pipeline = uniform([](const MetricsReport& r) { return r.pipeline; });
    a.grid_n = uniform([](const MetricsReport& r) { return r.grid_n; });
    std::vector<double> maes, pccs;
    double rmse = 0.0;
    for (const auto* r : rows) {
      maes.push_back(r->mae);
      rmse += r->rmse;
      if (r->pcc_defined) pccs.push_back(r->pcc);
      a.windows += r->windows;
    }
    double mae = 0.0;
    for (double m : maes) mae += m;
    a.mae = mae / static_cast<double>(maes.size());
    a.mae_sd = pop_sd(maes);
    a.rmse = rmse / static_cast<double>(rows.size());
    a.pcc_defined = !pccs.empty();
    a.pcc = median(pccs);
    a.videos = rows.size();
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<MetricsReport> aggregate_dataset(std::span<const MetricsReport> reports, GroupBy key) {
  const GroupBy keys[] = {key};
  return aggregate_dataset(reports, std::span<const GroupBy>(keys));
}

void write_reports_csv(std::ostream& os, std::span<const MetricsReport> rows) {
  os << "schema_version,video_id,scenario,method,pipeline,grid_n,mae_bpm,mae_sd_bpm,rmse_bpm,pcc,pcc_defined,"
        "windows,lag_s,aligned\n";
  for (const auto& r : rows) {
    os << kReportSchemaVersion << ',' << r.video_id << ',' << r.scenario << ',' << r.method << ',' << r.pipeline
       << ',' << r.grid_n << ',' << r.mae << ',' << r.mae_sd << ',' << r.rmse << ',';
    if (r.pcc_defined) os << r.pcc;
    os << ',' << (r.pcc_defined ? 1 : 0) << ',' << r.windows << ',' << r.lag_s << ',' << (r.aligned ? 1 : 0)
       << '\n';
  }
}

void write_aggregate_csv(std::ostream& os, std::span<const MetricsReport> rows, std::span<const GroupBy> keys) {
  os << "schema_version,group,method,pipeline,scenario,grid_n,videos,mae_bpm,mae_sd_bpm,pcc_median,rmse_bpm\n";
  for (const auto& r : rows) {
    os << kReportSchemaVersion << ',' << group_label(r, keys) << ',' << r.method << ',' << r.pipeline << ','
       << r.scenario << ',' << r.grid_n << ',' << r.videos << ',' << r.mae << ',' << r.mae_sd << ',';
    if (r.pcc_defined) os << r.pcc;
    os << ',' << r.rmse << '\n';
  }
}

void write_markdown_table(std::ostream& os, std::span<const MetricsReport> rows, std::span<const GroupBy> keys) {
  char buf[128];
  os << "| Group | MAE ± SD | PCC | RMSE |\n|---|---|---|---|\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", r.mae, r.mae_sd);
    os << "| " << group_label(r, keys, true) << " | " << buf << " | ";
    if (r.pcc_defined) {
      std::snprintf(buf, sizeof buf, "%.2f", r.pcc);
      os << buf;
    } else {
      os << "n/a";
    }
    std::snprintf(buf, sizeof buf, "%.2f", r.rmse);
    os << " | " << buf << " |\n";
  }
}

void write_series_csv(std::ostream& os, const spectral::HrSeries& ref, const spectral::HrSeries& est, double lag_s) {
  const long L = lag_steps(lag_s, step_of(ref, est));
  os << "time_s,ref_bpm,ref_valid,est_bpm,est_valid\n";
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const long j = static_cast<long>(i) - L;
    os << ref.times[i] << ',' << ref.bpm[i] << ',' << (ref.valid[i] ? 1 : 0) << ',';
    if (j >= 0 && j < static_cast<long>(est.size()))
      os << est.bpm[static_cast<std::size_t>(j)] << ',' << (est.valid[static_cast<std::size_t>(j)] ? 1 : 0);
    else
      os << ",0";
    os << '\n';
  }
}

}  // namespace fp::eval
