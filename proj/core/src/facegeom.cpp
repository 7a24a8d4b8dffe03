#include "facepulse/facegeom.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "facepulse/error.hpp"

namespace fp::facegeom {

namespace detail {
extern const std::string_view kCanonicalMeshText;
}

namespace {

// Forehead construction constants; tools/gen_canonical_mesh.py mirrors them.
constexpr double kBrowLift = 1.4;
constexpr double kArcHeight = 0.6;
constexpr std::array<std::array<double, 2>, 6> kArc{{
    {0.9009688679024191, 0.4338837391175581},
    {0.6234898018587336, 0.7818314824680298},
    {0.22252093395631445, 0.9749279121818236},
    {-0.22252093395631434, 0.9749279121818236},
    {-0.6234898018587335, 0.7818314824680299},
    {-0.900968867902419, 0.43388373911755823},
}};

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

std::string_view next_line(std::string_view& text) {
  const auto pos = text.find('\n');
  std::string_view line = text.substr(0, pos);
  text = pos == std::string_view::npos ? std::string_view{} : text.substr(pos + 1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T parse_num(std::string_view s, int line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(Errc::format, "canonical mesh line " + std::to_string(line_no) + ": bad number '" +
                           std::string(s) + "'");
  return value;
}

}  // namespace

CanonicalMesh CanonicalMesh::parse(std::string_view text) {
  CanonicalMesh mesh;
  std::string_view rest = text;
  int line_no = 0;
  bool have_version = false;
  bool have_checksum = false;
  std::uint32_t declared = 0;
  // Header: comments, "version <tag> raster <W> <H>", "checksum crc32 <hex>".
  while (!rest.empty() && !have_checksum) {
    std::string_view line = next_line(rest);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto tok = split_ws(line);
    if (tok[0] == "version") {
      if (tok.size() != 5 || tok[2] != "raster") fail(Errc::format, "canonical mesh: malformed version line");
      mesh.version_ = std::string(tok[1]);
      mesh.width_ = parse_num<int>(tok[3], line_no);
      mesh.height_ = parse_num<int>(tok[4], line_no);
      have_version = true;
    } else if (tok[0] == "checksum") {
      if (tok.size() != 3 || tok[1] != "crc32") fail(Errc::format, "canonical mesh: malformed checksum line");
      std::uint32_t v = 0;
      auto [ptr, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), v, 16);
      if (ec != std::errc{}) fail(Errc::format, "canonical mesh: bad checksum value");
      declared = v;
      have_checksum = true;
    } else {
      fail(Errc::format, "canonical mesh: unexpected header line " + std::to_string(line_no));
    }
  }
  if (!have_version || !have_checksum) fail(Errc::format, "canonical mesh: missing version or checksum");

  const auto actual = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(rest.data()), static_cast<uInt>(rest.size())));
  if (actual != declared) fail(Errc::format, "canonical mesh: checksum mismatch");
  mesh.checksum_ = actual;

  auto expect_section = [&](std::string_view name) {
    const auto tok = split_ws(next_line(rest));
    ++line_no;
    if (tok.size() != 2 || tok[0] != name) fail(Errc::format, "canonical mesh: expected '" + std::string(name) + "'");
    return parse_num<std::size_t>(tok[1], line_no);
  };

  const std::size_t nv = expect_section("vertices");
  if (nv != kExtendedLandmarks) fail(Errc::format, "canonical mesh: expected 85 vertices");
  for (std::size_t i = 0; i < nv; ++i) {
    const auto tok = split_ws(next_line(rest));
    ++line_no;
    if (tok.size() != 3 || parse_num<std::size_t>(tok[0], line_no) != i)
      fail(Errc::format, "canonical mesh: bad vertex row at line " + std::to_string(line_no));
    mesh.vertices_.push_back({parse_num<double>(tok[1], line_no), parse_num<double>(tok[2], line_no)});
  }
  const std::size_t nt = expect_section("triangles");
  if (nt != kMeshTriangles) fail(Errc::format, "canonical mesh: expected 131 triangles");
  for (std::size_t i = 0; i < nt; ++i) {
    const auto tok = split_ws(next_line(rest));
    ++line_no;
    if (tok.size() != 3) fail(Errc::format, "canonical mesh: bad triangle row at line " + std::to_string(line_no));
    Triangle t;
    for (int k = 0; k < 3; ++k) {
      t.v[static_cast<std::size_t>(k)] = parse_num<int>(tok[static_cast<std::size_t>(k)], line_no);
      if (t.v[static_cast<std::size_t>(k)] < 0 || t.v[static_cast<std::size_t>(k)] >= static_cast<int>(nv))
        fail(Errc::format, "canonical mesh: vertex index out of range at line " + std::to_string(line_no));
    }
    mesh.triangles_.push_back(t);
    if (!(mesh.triangle_area(i) > 0.0))
      fail(Errc::format, "canonical mesh: degenerate triangle at line " + std::to_string(line_no));
  }
  mesh.rasterize();
  return mesh;
}

CanonicalMesh CanonicalMesh::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::format, "cannot open canonical mesh file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const CanonicalMesh& CanonicalMesh::builtin() {
  static const CanonicalMesh mesh = parse(detail::kCanonicalMeshText);
  return mesh;
}

double CanonicalMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles_.at(t);
  return signed_area(vertices_[static_cast<std::size_t>(tri.v[0])], vertices_[static_cast<std::size_t>(tri.v[1])],
                     vertices_[static_cast<std::size_t>(tri.v[2])]);
}

void CanonicalMesh::rasterize() {
  const std::size_t n = static_cast<std::size_t>(width_) * height_;
  pixel_triangle_.assign(n, -1);
  pixel_weights_.assign(n, {0.0, 0.0, 0.0});
  covered_ = 0;
  constexpr double kEdgeTol = 1e-9;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const Point& a = vertices_[static_cast<std::size_t>(triangles_[t].v[0])];
    const Point& b = vertices_[static_cast<std::size_t>(triangles_[t].v[1])];
    const Point& c = vertices_[static_cast<std::size_t>(triangles_[t].v[2])];
    const double area2 = 2.0 * signed_area(a, b, c);
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int x1 = std::min(width_ - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int y1 = std::min(height_ - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t idx = static_cast<std::size_t>(y) * width_ + x;
        if (pixel_triangle_[idx] >= 0) continue;
        const Point p{static_cast<double>(x), static_cast<double>(y)};
        const double l0 = 2.0 * signed_area(p, b, c) / area2;
        const double l1 = 2.0 * signed_area(a, p, c) / area2;
        const double l2 = 1.0 - l0 - l1;
        if (l0 < -kEdgeTol || l1 < -kEdgeTol || l2 < -kEdgeTol) continue;
        pixel_triangle_[idx] = static_cast<int>(t);
        pixel_weights_[idx] = {l0, l1, l2};
        ++covered_;
      }
    }
  }
}

LandmarkFrame CanonicalMesh::canonical_landmarks() const {
  LandmarkFrame lm;
  lm.points = vertices_;
  return lm;
}

Bounds bounds(std::span<const Point> pts) {
  Bounds b{pts[0].x, pts[0].y, pts[0].x, pts[0].y};
  for (const Point& p : pts) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

LandmarkFrame extend_landmarks(const LandmarkFrame& lm) {
  if (lm.points.size() == kExtendedLandmarks) return lm;
  if (lm.points.size() != kBaseLandmarks)
    fail(Errc::invalid_input, "expected 68 or 85 landmarks, got " + std::to_string(lm.points.size()));
  for (const Point& p : lm.points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail(Errc::invalid_input, "non-finite landmark");

  // Collinearity check on the point cloud's second moments.
  double mx = 0.0, my = 0.0;
  for (const Point& p : lm.points) {
    mx += p.x;
    my += p.y;
  }
  mx /= kBaseLandmarks;
  my /= kBaseLandmarks;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const Point& p : lm.points) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  if (!(tr > 0.0) || det <= 1e-9 * tr * tr) fail(Errc::degenerate_face, "landmarks are collinear");

  const auto& p = lm.points;
  const double ax = p[0].x, ay = p[0].y;
  const double bx = p[16].x, by = p[16].y;
  const double chx = p[8].x, chy = p[8].y;
  const double vx = bx - ax;
  const double vy = by - ay;
  const double w = std::sqrt(vx * vx + vy * vy);
  if (!(w > 0.0)) fail(Errc::degenerate_face, "jaw endpoints coincide");
  const double ex = vx / w;
  const double ey = vy / w;
  double nx = -ey;
  double ny = ex;
  const double chin_side = nx * (chx - ax) + ny * (chy - ay);
  if (chin_side == 0.0) fail(Errc::degenerate_face, "chin lies on the jaw line");
  if (chin_side > 0.0) {
    nx = -nx;
    ny = -ny;
  }

  LandmarkFrame out = lm;
  out.points.reserve(kExtendedLandmarks);
  for (std::size_t i = 17; i < 27; ++i) {
    const double px = p[i].x, py = p[i].y;
    const double d = nx * (px - ax) + ny * (py - ay);
    const double lift = d * kBrowLift;
    out.points.push_back({px + nx * lift, py + ny * lift});
  }
  const Point l4 = out.points[kBaseLandmarks + 4];
  const Point l5 = out.points[kBaseLandmarks + 5];
  out.points.push_back({(l4.x + l5.x) * 0.5, (l4.y + l5.y) * 0.5});
  const double cx = (ax + bx) * 0.5;
  const double cy = (ay + by) * 0.5;
  const double half = w * 0.5;
  const double height = w * kArcHeight;
  for (const auto& cs : kArc) {
    const double u = -cs[0] * half;
    const double h = cs[1] * height;
    out.points.push_back({cx + ex * u + nx * h, cy + ey * u + ny * h});
  }
  return out;
}

void warp_to_canonical(const Image8& frame, const LandmarkFrame& lm85, const CanonicalMesh& mesh,
                       ImageF& out, WarpReport* report) {
  if (lm85.points.size() != kExtendedLandmarks)
    fail(Errc::invalid_input, "warp needs 85 landmarks");
  if (frame.empty()) fail(Errc::invalid_input, "empty source frame");
  if (out.width != mesh.width() || out.height != mesh.height())
    out = ImageF(mesh.width(), mesh.height());

  const auto& tris = mesh.triangles();
  std::vector<char> degenerate(tris.size(), 0);
  if (report) report->degenerate_triangles.clear();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto& v = tris[t].v;
    const double area = std::abs(signed_area(lm85.points[static_cast<std::size_t>(v[0])],
                                             lm85.points[static_cast<std::size_t>(v[1])],
                                             lm85.points[static_cast<std::size_t>(v[2])]));
    if (!(area >= kMinSourceTriangleArea)) {
      degenerate[t] = 1;
      if (report) report->degenerate_triangles.push_back(static_cast<int>(t));
    }
  }

  const int sw = frame.width;
  const int sh = frame.height;
  const auto& tri_of = mesh.pixel_triangle();
  const auto& weights = mesh.pixel_weights();
  const std::size_t n = static_cast<std::size_t>(mesh.width()) * mesh.height();
  for (std::size_t idx = 0; idx < n; ++idx) {
    float* dst = &out.data[idx * 3];
    const int t = tri_of[idx];
    if (t < 0 || degenerate[static_cast<std::size_t>(t)]) {
      dst[0] = dst[1] = dst[2] = 0.0f;
      continue;
    }
    const auto& v = tris[static_cast<std::size_t>(t)].v;
    const auto& l = weights[idx];
    const Point& a = lm85.points[static_cast<std::size_t>(v[0])];
    const Point& b = lm85.points[static_cast<std::size_t>(v[1])];
    const Point& c = lm85.points[static_cast<std::size_t>(v[2])];
    double sx = l[0] * a.x + l[1] * b.x + l[2] * c.x;
    double sy = l[0] * a.y + l[1] * b.y + l[2] * c.y;
    sx = std::clamp(sx, 0.0, static_cast<double>(sw - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(sh - 1));
    const int x0 = static_cast<int>(sx);
    const int y0 = static_cast<int>(sy);
    const int x1 = std::min(x0 + 1, sw - 1);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double fx = sx - x0;
    const double fy = sy - y0;
    for (int ch = 0; ch < 3; ++ch) {
      const double top = (1.0 - fx) * frame.at(x0, y0, ch) + fx * frame.at(x1, y0, ch);
      const double bot = (1.0 - fx) * frame.at(x0, y1, ch) + fx * frame.at(x1, y1, ch);
      dst[ch] = static_cast<float>((1.0 - fy) * top + fy * bot);
    }
  }
}

ImageF warp_to_canonical(const Image8& frame, const LandmarkFrame& lm85, const CanonicalMesh& mesh,
                         WarpReport* report) {
  ImageF out(mesh.width(), mesh.height());
  warp_to_canonical(frame, lm85, mesh, out, report);
  return out;
}

NormalizedFaceStack normalize_sequence(std::span<const Image8> frames, const LandmarkSequence& lms,
                                       const CanonicalMesh& mesh, double fs) {
  if (frames.size() != lms.size())
    fail(Errc::invalid_input, "frame and landmark sequences differ in length");
  const auto first = std::find_if(lms.begin(), lms.end(), [](const auto& lm) { return lm.has_value(); });
  if (first == lms.end()) fail(Errc::empty_stack, "no frame has landmarks");

  NormalizedFaceStack stack;
  stack.fs = fs;
  stack.frames.resize(frames.size());
  stack.valid.assign(frames.size(), false);
  const auto first_idx = static_cast<std::size_t>(first - lms.begin());
  stack.frames[first_idx] = warp_to_canonical(frames[first_idx], extend_landmarks(**first), mesh);
  stack.valid[first_idx] = true;
  for (std::size_t k = 0; k < first_idx; ++k) stack.frames[k] = stack.frames[first_idx];
  for (std::size_t k = first_idx + 1; k < frames.size(); ++k) {
    if (lms[k]) {
      warp_to_canonical(frames[k], extend_landmarks(*lms[k]), mesh, stack.frames[k]);
      stack.valid[k] = true;
    } else {
      stack.frames[k] = stack.frames[k - 1];
    }
  }
  return stack;
}

}  // namespace fp::facegeom
