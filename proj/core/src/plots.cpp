#include "facepulse/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "facepulse/error.hpp"

namespace fp::plots {

namespace {

namespace fs = std::filesystem;

constexpr double kW = 820, kH = 420;
constexpr double kLeft = 64, kRight = 150, kTop = 36, kBottom = 48;
constexpr const char* kRefColor = "#1f4fa8";
constexpr std::array<const char*, 6> kPalette{"#c8281e", "#2a9d4b", "#8b44ac", "#d98c14", "#178f8f", "#6b6b6b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string num_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(Errc::data, "column '" + name + "' missing");
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail(Errc::data, "cannot read " + p.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) fail(Errc::data, p.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

double to_d(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    return std::nan("");
  }
}

// Round outward to a multiple of `step`.
std::pair<double, double> nice_range(double lo, double hi, double step) {
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;
  if (hi <= lo) hi = lo + step;
  return {lo, hi};
}

class Svg {
 public:
  Svg() {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  void line(double x0, double y0, double x1, double y1, const char* color, double width = 1.0) {
    os_ << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y1)
        << "\" stroke=\"" << color << "\" stroke-width=\"" << num(width) << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const char* anchor = "middle") {
    os_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << "\">" << s
        << "</text>\n";
  }
  void rect(double x, double y, double w, double h, const char* stroke, const char* fill) {
    os_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
        << "\" stroke=\"" << stroke << "\" fill=\"" << fill << "\"/>\n";
  }
  void circle(double x, double y, double r, const char* color) {
    os_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"none\" stroke=\""
        << color << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color) {
    if (pts.empty()) return;
    os_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) os_ << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
    os_ << "\"/>\n";
  }
  void save(const fs::path& p) {
    os_ << "</svg>\n";
    std::ofstream out(p, std::ios::binary);
    if (!out) fail(Errc::data, "cannot write " + p.string());
    out << os_.str();
  }

 private:
  std::ostringstream os_;
};

struct Axes {
  double x0, x1, y0, y1;  // data range
  bool log_y = false;

  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const {
    const double a = log_y ? std::log10(y0) : y0, b = log_y ? std::log10(y1) : y1;
    const double v = log_y ? std::log10(y) : y;
    return kH - kBottom - (v - a) / (b - a) * (kH - kTop - kBottom);
  }
};

void frame(Svg& svg, const Axes& ax, const std::vector<double>& yticks, const std::string& ylabel,
           const std::string& title) {
  const double bx0 = kLeft, bx1 = kW - kRight, by0 = kTop, by1 = kH - kBottom;
  svg.rect(bx0, by0, bx1 - bx0, by1 - by0, "#333333", "none");
  for (double t : yticks) {
    const double y = ax.py(t);
    svg.line(bx0, y, bx1, y, "#e2e2e2");
    svg.text(bx0 - 6, y + 4, num_g(t), "end");
  }
  svg.text(18, (by0 + by1) / 2, ylabel);
  svg.text((bx0 + bx1) / 2, 22, title);
}

struct SeriesFile {
  std::string video, method, grid;
  fs::path path;
};

std::vector<SeriesFile> list_series(const fs::path& dir) {
  std::vector<SeriesFile> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    const std::string stem = e.path().stem().string();
    const auto a = stem.find("__");
    const auto b = stem.rfind("__");
    if (a == std::string::npos || a == b) continue;
    out.push_back({stem.substr(0, a), stem.substr(a + 2, b - a - 2), stem.substr(b + 2), e.path()});
  }
  std::sort(out.begin(), out.end(), [](const SeriesFile& x, const SeriesFile& y) { return x.path < y.path; });
  return out;
}

int grid_of(const std::string& label) { return std::atoi(label.c_str()); }

fs::path overlay(const fs::path& out_dir, const std::string& video, const std::vector<const SeriesFile*>& files) {
  std::vector<std::pair<double, double>> ref;
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> est;
  double tmax = 0, lo = 1e300, hi = -1e300;
  for (std::size_t k = 0; k < files.size(); ++k) {
    const Table t = read_csv(files[k]->path);
    const auto ct = t.col("time_s"), cr = t.col("ref_bpm"), crv = t.col("ref_valid"), ce = t.col("est_bpm"),
               cev = t.col("est_valid");
    std::vector<std::pair<double, double>> e;
    for (const auto& row : t.rows) {
      const double time = to_d(row.at(ct));
      tmax = std::max(tmax, time);
      if (k == 0 && row.at(crv) == "1") ref.push_back({time, to_d(row.at(cr))});
      if (row.size() > cev && row.at(cev) == "1") e.push_back({time, to_d(row.at(ce))});
    }
    est.push_back({files[k]->method, std::move(e)});
  }
  for (const auto& [t, v] : ref) lo = std::min(lo, v), hi = std::max(hi, v);
  for (const auto& [m, pts] : est)
    for (const auto& [t, v] : pts) lo = std::min(lo, v), hi = std::max(hi, v);
  if (lo > hi) lo = 60, hi = 100;
  const auto [y0, y1] = nice_range(lo - 2, hi + 2, 10.0);
  Axes ax{0.0, std::max(tmax, 1.0), y0, y1};

  Svg svg;
  std::vector<double> ticks;
  for (double y = y0; y <= y1 + 1e-9; y += 10) ticks.push_back(y);
  frame(svg, ax, ticks, "bpm", "HR envelope - " + video);
  for (double t = 0; t <= ax.x1 + 1e-9; t += ax.x1 > 100 ? 20 : 10) {
    svg.line(ax.px(t), kH - kBottom, ax.px(t), kH - kBottom + 4, "#333333");
    svg.text(ax.px(t), kH - kBottom + 18, num_g(t));
  }
  svg.text((kLeft + kW - kRight) / 2, kH - 10, "window start (s)");

  const auto to_px = [&](const std::vector<std::pair<double, double>>& pts) {
    std::vector<std::pair<double, double>> out;
    for (const auto& [t, v] : pts) out.push_back({ax.px(t), ax.py(v)});
    return out;
  };
  svg.polyline(to_px(ref), kRefColor);
  double ly = kTop + 10;
  svg.line(kW - kRight + 12, ly, kW - kRight + 36, ly, kRefColor, 2);
  svg.text(kW - kRight + 42, ly + 4, "reference", "start");
  for (std::size_t k = 0; k < est.size(); ++k) {
    const char* c = kPalette[k % kPalette.size()];
    svg.polyline(to_px(est[k].second), c);
    ly += 18;
    svg.line(kW - kRight + 12, ly, kW - kRight + 36, ly, c, 2);
    svg.text(kW - kRight + 42, ly + 4, est[k].first, "start");
  }
  const fs::path p = out_dir / ("hr_" + video + ".svg");
  svg.save(p);
  return p;
}

fs::path box_plot(const fs::path& out_dir, const std::map<std::string, std::vector<double>>& maes, bool log_y) {
  double lo = 1e300, hi = -1e300;
  const double floor_v = 0.01;
  for (const auto& [m, v] : maes)
    for (double x : v) {
      const double y = log_y ? std::max(x, floor_v) : x;
      lo = std::min(lo, y), hi = std::max(hi, y);
    }
  std::vector<double> ticks;
  Axes ax{0.0, static_cast<double>(maes.size()), 0, 1, log_y};
  if (log_y) {
    const double a = std::floor(std::log10(lo)), b = std::max(a + 1, std::ceil(std::log10(hi)));
    ax.y0 = std::pow(10.0, a);
    ax.y1 = std::pow(10.0, b);
    for (double e = a; e <= b; ++e) ticks.push_back(std::pow(10.0, e));
  } else {
    const double step = hi > 20 ? 10 : (hi > 5 ? 2 : 0.5);
    const auto [y0, y1] = nice_range(0, hi * 1.05, step);
    ax.y0 = y0;
    ax.y1 = y1;
    for (double y = y0; y <= y1 + 1e-9; y += step) ticks.push_back(y);
  }
  Svg svg;
  frame(svg, ax, ticks, "MAE (bpm)", log_y ? "MAE per method (log scale)" : "MAE per method");
  std::size_t k = 0;
  for (const auto& [method, values] : maes) {
    std::vector<double> v = values;
    if (log_y)
      for (double& x : v) x = std::max(x, floor_v);
    const auto b = box_stats(v);
    const double cx = ax.px(static_cast<double>(k) + 0.5), hw = std::min(40.0, 0.3 * (ax.px(1) - ax.px(0)));
    const char* c = kPalette[k % kPalette.size()];
    svg.line(cx, ax.py(b.lo_whisker), cx, ax.py(b.q1), "#333333");
    svg.line(cx, ax.py(b.q3), cx, ax.py(b.hi_whisker), "#333333");
    svg.line(cx - hw / 2, ax.py(b.lo_whisker), cx + hw / 2, ax.py(b.lo_whisker), "#333333");
    svg.line(cx - hw / 2, ax.py(b.hi_whisker), cx + hw / 2, ax.py(b.hi_whisker), "#333333");
    svg.rect(cx - hw, ax.py(b.q3), 2 * hw, std::max(0.5, ax.py(b.q1) - ax.py(b.q3)), c, "#f4f4f4");
    svg.line(cx - hw, ax.py(b.median), cx + hw, ax.py(b.median), c, 2);
    for (double o : b.outliers) svg.circle(cx, ax.py(o), 3, c);
    svg.text(cx, kH - kBottom + 18, method);
    ++k;
  }
  const fs::path p = out_dir / "mae_box.svg";
  svg.save(p);
  return p;
}

}  // namespace

BoxStats box_stats(std::vector<double> v) {
  if (v.empty()) fail(Errc::invalid_input, "box_stats of an empty sample");
  std::sort(v.begin(), v.end());
  const auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1 - f) + v[i + 1] * f : v[i];
  };
  BoxStats b{q(0.25), q(0.5), q(0.75), 0, 0, {}};
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.lo_whisker = b.q1;
  b.hi_whisker = b.q3;
  for (double x : v) {
    if (x < lo || x > hi) {
      b.outliers.push_back(x);
      continue;
    }
    b.lo_whisker = std::min(b.lo_whisker, x);
    b.hi_whisker = std::max(b.hi_whisker, x);
  }
  return b;
}

std::vector<fs::path> run_plots(const fs::path& run_dir, const PlotOptions& opt) {
  const fs::path reports = run_dir / "reports.csv";
  if (!fs::exists(reports)) fail(Errc::data, "no reports.csv in " + run_dir.string());
  const Table t = read_csv(reports);
  if (t.rows.empty()) fail(Errc::data, "run " + run_dir.string() + " has no reports");
  const auto series = list_series(run_dir / "series");
  if (series.empty()) fail(Errc::data, "run " + run_dir.string() + " has no series files");

  // One grid per plot: the smallest present (a plain run has exactly one).
  std::set<int> grids;
  const auto cg = t.col("grid_n"), cm = t.col("method"), cmae = t.col("mae_bpm");
  for (const auto& row : t.rows) grids.insert(std::atoi(row.at(cg).c_str()));
  const int grid = *grids.begin();

  const fs::path out_dir = run_dir / "plots";
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  std::map<std::string, std::vector<const SeriesFile*>> by_video;
  for (const auto& s : series)
    if (grid_of(s.grid) == grid) by_video[s.video].push_back(&s);
  for (const auto& [video, files] : by_video) written.push_back(overlay(out_dir, video, files));

  std::map<std::string, std::vector<double>> maes;
  for (const auto& row : t.rows)
    if (std::atoi(row.at(cg).c_str()) == grid) maes[row.at(cm)].push_back(to_d(row.at(cmae)));
  written.push_back(box_plot(out_dir, maes, opt.log_scale));
  return written;
}

}  // namespace fp::plots
