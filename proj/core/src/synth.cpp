#include "facepulse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "facepulse/error.hpp"
#include "facepulse/regions.hpp"

namespace fp::synth {

namespace {

constexpr int kCanon = 180;
constexpr double kCenter = 89.5;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = seed ^ (a * 0xD1B54A32D192ED03ULL) ^ (b * 0xABC98388FB8FAC03ULL);
  splitmix64(s);
  return splitmix64(s);
}

// Irwin-Hall(4) approximation of a standard normal from one 64-bit draw.
inline double fast_normal(std::uint64_t r) {
  constexpr double inv = 1.0 / 65536.0;
  const double s = ((r & 0xFFFF) + ((r >> 16) & 0xFFFF) + ((r >> 32) & 0xFFFF) + (r >> 48) + 2.0) * inv;
  return (s - 2.0) * 1.7320508075688772;
}

bool inside_polygon(const std::vector<facegeom::Point>& poly, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

double segment_distance(const facegeom::Point& a, const facegeom::Point& b, double x, double y) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double t = std::clamp(((x - a.x) * dx + (y - a.y) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  const double ex = a.x + t * dx - x, ey = a.y + t * dy - y;
  return std::sqrt(ex * ex + ey * ey);
}

std::vector<facegeom::Point> pick(const std::vector<facegeom::Point>& v, int from, int to) {
  return {v.begin() + from, v.begin() + to + 1};
}

}  // namespace

void SyntheticSpec::validate() const {
  if (!(duration_s > 0.0) || !(fs > 0.0)) fail(Errc::invalid_input, "synthetic duration and fs must be positive");
  if (hr.empty()) fail(Errc::invalid_input, "synthetic hr trajectory is empty");
  for (std::size_t i = 0; i < hr.size(); ++i) {
    if (hr[i].bpm < 45.0 || hr[i].bpm > 240.0) fail(Errc::invalid_input, "synthetic hr outside 45-240 bpm");
    if (i > 0 && !(hr[i].start_s > hr[i - 1].start_s))
      fail(Errc::invalid_input, "synthetic hr segments must be ascending");
  }
  if (!(amplitude >= 0.0)) fail(Errc::invalid_input, "synthetic amplitude must be non-negative");
  if (grid_n < 1 || grid_n > kCanon) fail(Errc::invalid_input, "synthetic grid_n out of range");
  for (int id : injected_regions)
    if (id < 0 || id >= grid_n * grid_n) fail(Errc::invalid_input, "injected region id out of range");
  if (noise_sigma < 0.0 || region_noise_sigma < 0.0 || landmark_jitter < 0.0)
    fail(Errc::invalid_input, "synthetic noise levels must be non-negative");
  if (!(reference_fs > 0.0)) fail(Errc::invalid_input, "synthetic reference_fs must be positive");
}

SyntheticVideo::SyntheticVideo(SyntheticSpec spec, std::uint64_t seed, const facegeom::CanonicalMesh& mesh)
    : spec_(std::move(spec)), seed_(seed), mesh_(mesh) {
  spec_.validate();
  frames_ = static_cast<std::size_t>(std::floor(spec_.duration_s * spec_.fs + 1e-9));
  const double T = static_cast<double>(frames_) / spec_.fs;
  const int ex = static_cast<int>(std::ceil(std::abs(spec_.vx) * T));
  const int ey = static_cast<int>(std::ceil(std::abs(spec_.vy) * T));
  width_ = spec_.base_width + ex;
  height_ = spec_.base_height + ey;
  ox0_ = (spec_.base_width - kCanon) / 2.0 + (spec_.vx < 0.0 ? ex : 0);
  oy0_ = (spec_.base_height - kCanon) / 2.0 + (spec_.vy < 0.0 ? ey : 0);
  build_texture();

  landmarks_.resize(frames_);
  for (std::size_t i = 0; i < frames_; ++i) {
    const double t = static_cast<double>(i) / spec_.fs;
    facegeom::LandmarkFrame lm = source_landmarks(*this, t);
    lm.frame_index = static_cast<std::int64_t>(i);
    lm.confidence = 1.0;
    if (spec_.landmark_jitter > 0.0) {
      std::mt19937_64 rng(mix(seed_, i, 1));
      std::normal_distribution<double> nd(0.0, spec_.landmark_jitter);
      for (auto& p : lm.points) {
        p.x += nd(rng);
        p.y += nd(rng);
      }
    }
    landmarks_[i] = std::move(lm);
  }

  reference_.fs = spec_.reference_fs;
  const auto nref = static_cast<std::size_t>(std::floor(spec_.duration_s * spec_.reference_fs + 1e-9));
  reference_.samples.resize(nref);
  for (std::size_t k = 0; k < nref; ++k) reference_.samples[k] = pulse(static_cast<double>(k) / spec_.reference_fs);
}

void SyntheticVideo::build_texture() {
  const auto& v = mesh_.vertices();
  const std::size_t n = static_cast<std::size_t>(kCanon) * kCanon;
  texture_.assign(n * 3, 0.0f);
  face_mask_.assign(n, 0.0f);
  cell_.assign(n, 0);

  // Head ellipse: the vertex bounding ellipse grown by 4%.
  const auto b = facegeom::bounds(v);
  const double cx = 0.5 * (b.x0 + b.x1), cy = 0.5 * (b.y0 + b.y1);
  const double ax = 0.5 * (b.x1 - b.x0), ay = 0.5 * (b.y1 - b.y0);
  double k = 0.0;
  for (const auto& p : v) k = std::max(k, std::pow((p.x - cx) / ax, 2) + std::pow((p.y - cy) / ay, 2));
  const double ra = ax * std::sqrt(k) * 1.04, rb = ay * std::sqrt(k) * 1.04;

  const auto left_eye = pick(v, 36, 41), right_eye = pick(v, 42, 47), lips = pick(v, 48, 59);
  const auto boxes = regions::grid_partition(kCanon, kCanon, spec_.grid_n);
  injected_.assign(boxes.size(), spec_.injected_regions.empty());
  for (int id : spec_.injected_regions) injected_[static_cast<std::size_t>(id)] = true;

  for (const auto& box : boxes)
    for (int y = box.y0; y < box.y1; ++y)
      for (int x = box.x0; x < box.x1; ++x) cell_[static_cast<std::size_t>(y) * kCanon + x] = box.id;

  constexpr double tau = 2.0 * std::numbers::pi;
  for (int y = 0; y < kCanon; ++y) {
    for (int x = 0; x < kCanon; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * kCanon + x;
      const double e = std::pow((x - cx) / ra, 2) + std::pow((y - cy) / rb, 2);
      face_mask_[i] = e <= 1.0 ? 1.0f : 0.0f;
      const double shade = 1.0 + 0.06 * std::sin(tau * x / 47.0 + 0.3) * std::cos(tau * y / 61.0) +
                           0.05 * (y - kCenter) / kCenter;
      std::array<double, 3> c{195.0, 145.0, 125.0};
      if (inside_polygon(left_eye, x, y) || inside_polygon(right_eye, x, y)) {
        c = {60.0, 45.0, 40.0};
      } else if (inside_polygon(lips, x, y)) {
        c = {170.0, 80.0, 80.0};
      } else {
        for (int s = 17; s < 26; ++s) {
          if (s == 21) continue;
          if (segment_distance(v[static_cast<std::size_t>(s)], v[static_cast<std::size_t>(s) + 1], x, y) <= 1.8) {
            c = {90.0, 60.0, 45.0};
            break;
          }
        }
      }
      for (int ch = 0; ch < 3; ++ch) texture_[i * 3 + ch] = static_cast<float>(c[static_cast<std::size_t>(ch)] * shade);
    }
  }

  background_.assign(static_cast<std::size_t>(width_) * height_ * 3, 0.0f);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) {
      const double pat = 1.0 + 0.1 * std::sin(tau * x / 37.0) * std::sin(tau * y / 29.0);
      float* px = &background_[(static_cast<std::size_t>(y) * width_ + x) * 3];
      px[0] = static_cast<float>(70.0 * pat);
      px[1] = static_cast<float>(95.0 * pat);
      px[2] = static_cast<float>(85.0 * pat);
    }
}

double SyntheticVideo::phase(double t) const {
  double ph = 0.0;
  const auto& hr = spec_.hr;
  for (std::size_t k = 0; k < hr.size(); ++k) {
    const double a = k == 0 ? 0.0 : hr[k].start_s;
    if (t <= a) break;
    const double b = k + 1 < hr.size() ? std::min(t, hr[k + 1].start_s) : t;
    ph += hr[k].bpm / 60.0 * (b - a);
  }
  return 2.0 * std::numbers::pi * ph;
}

double SyntheticVideo::pulse(double t) const {
  const double ph = phase(t);
  return std::sin(ph) + spec_.harmonic * std::sin(2.0 * ph);
}

double SyntheticVideo::bpm_at(double t) const {
  double bpm = spec_.hr.front().bpm;
  for (const auto& s : spec_.hr)
    if (t >= s.start_s) bpm = s.bpm;
  return bpm;
}

facegeom::Point SyntheticVideo::to_source(const facegeom::Point& q, double t) const {
  const double th = spec_.rotation_amp_deg * std::numbers::pi / 180.0 *
                    std::sin(2.0 * std::numbers::pi * spec_.rotation_hz * t);
  const double c = std::cos(th), s = std::sin(th);
  const double dx = q.x - kCenter, dy = q.y - kCenter;
  return {c * dx - s * dy + kCenter + ox0_ + spec_.vx * t, s * dx + c * dy + kCenter + oy0_ + spec_.vy * t};
}

Image8 SyntheticVideo::frame(std::size_t index) const {
  const ImageF f = render(index);
  Image8 img(f.width, f.height);
  for (std::size_t i = 0; i < f.data.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(std::clamp(std::round(f.data[i]), 0.0f, 255.0f));
  return img;
}

ImageF SyntheticVideo::render(std::size_t index) const {
  if (index >= frames_) fail(Errc::invalid_input, "synthetic frame index out of range");
  const double t = static_cast<double>(index) / spec_.fs;
  const double s = pulse(t);
  const std::size_t n = static_cast<std::size_t>(kCanon) * kCanon;

  // Canonical frame: texture modulated in the injected cells plus cell noise.
  std::vector<double> rnoise(injected_.size() * 3, 0.0);
  if (spec_.region_noise_sigma > 0.0) {
    std::mt19937_64 rng(mix(seed_, index, 2));
    std::normal_distribution<double> nd(0.0, spec_.region_noise_sigma);
    for (double& r : rnoise) r = nd(rng);
  }
  std::vector<float> canon(n * 3);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cell = static_cast<std::size_t>(cell_[i]);
    const bool inj = injected_[cell];
    for (int ch = 0; ch < 3; ++ch) {
      const double base = texture_[i * 3 + ch];
      const double gain = inj ? 1.0 + spec_.amplitude * spec_.pulsatility[static_cast<std::size_t>(ch)] * s : 1.0;
      canon[i * 3 + ch] = static_cast<float>(base * gain + rnoise[cell * 3 + ch]);
    }
  }

  const double th = spec_.rotation_amp_deg * std::numbers::pi / 180.0 *
                    std::sin(2.0 * std::numbers::pi * spec_.rotation_hz * t);
  const double c = std::cos(th), sn = std::sin(th);
  const double ox = kCenter + ox0_ + spec_.vx * t;
  const double oy = kCenter + oy0_ + spec_.vy * t;

  ImageF img(width_, height_);
  std::uint64_t state = mix(seed_, index, 3);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      // Inverse similarity: q = R^T (p - centre - offset) + centre.
      const double px = x - ox, py = y - oy;
      const double qx = c * px + sn * py + kCenter;
      const double qy = -sn * px + c * py + kCenter;
      const std::size_t pi = static_cast<std::size_t>(y) * width_ + x;
      double out[3] = {background_[pi * 3], background_[pi * 3 + 1], background_[pi * 3 + 2]};
      if (qx >= 0.0 && qy >= 0.0 && qx <= kCanon - 1 && qy <= kCanon - 1) {
        const int x0 = std::min(static_cast<int>(qx), kCanon - 2);
        const int y0 = std::min(static_cast<int>(qy), kCanon - 2);
        const double fx = qx - x0, fy = qy - y0;
        const std::size_t i00 = static_cast<std::size_t>(y0) * kCanon + x0;
        const std::size_t i01 = i00 + 1, i10 = i00 + kCanon, i11 = i10 + 1;
        const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy), w10 = (1 - fx) * fy, w11 = fx * fy;
        const double a = w00 * face_mask_[i00] + w01 * face_mask_[i01] + w10 * face_mask_[i10] + w11 * face_mask_[i11];
        if (a > 0.0) {
          for (int ch = 0; ch < 3; ++ch) {
            // Mask-weighted face color so background never bleeds into the skin.
            const double f = w00 * face_mask_[i00] * canon[i00 * 3 + ch] + w01 * face_mask_[i01] * canon[i01 * 3 + ch] +
                             w10 * face_mask_[i10] * canon[i10 * 3 + ch] + w11 * face_mask_[i11] * canon[i11 * 3 + ch];
            out[ch] = f + (1.0 - a) * out[ch];
          }
        }
      }
      for (int ch = 0; ch < 3; ++ch) {
        double v = out[ch];
        if (spec_.noise_sigma > 0.0) v += spec_.noise_sigma * fast_normal(splitmix64(state));
        img.data[pi * 3 + ch] = static_cast<float>(v);
      }
    }
  }
  return img;
}

facegeom::LandmarkFrame source_landmarks(const SyntheticVideo& v, double t) {
  facegeom::LandmarkFrame lm;
  const auto& verts = v.mesh().vertices();
  lm.points.reserve(facegeom::kBaseLandmarks);
  for (std::size_t i = 0; i < facegeom::kBaseLandmarks; ++i) lm.points.push_back(v.to_source(verts[i], t));
  return lm;
}

}  // namespace fp::synth
