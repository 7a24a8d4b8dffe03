#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "facepulse/dsp.hpp"
#include "facepulse/facegeom.hpp"
#include "facepulse/io.hpp"

namespace fp::synth {

struct HrSegment {
  double start_s = 0.0;
  double bpm = 72.0;
};

struct SyntheticSpec {
  double duration_s = 60.0;
  double fs = 30.0;
  std::vector<HrSegment> hr{{0.0, 72.0}};  // piecewise constant, ascending start times
  double amplitude = 0.01;                 // fraction of the base color
  std::array<double, 3> pulsatility{0.33, 0.77, 0.53};
  double harmonic = 0.4;   // first-harmonic amplitude relative to the fundamental
  int grid_n = 9;          // grid the injected ids refer to
  std::vector<int> injected_regions;  // empty: every cell
  double noise_sigma = 2.0;           // per-pixel, 8-bit levels
  double region_noise_sigma = 0.0;    // per grid cell and frame, shared by the cell's pixels
  double vx = 0.0, vy = 0.0;          // translation, px/s
  double rotation_amp_deg = 0.0;      // in-plane oscillation about the face center
  double rotation_hz = 0.0;
  double landmark_jitter = 0.0;  // per-point Gaussian sigma, px
  int base_width = 320;
  int base_height = 320;
  double reference_fs = 60.0;

  void validate() const;
};

/// Deterministic synthetic face video. Frames render on demand from
/// (spec, seed, index), so long videos never sit in memory.
class SyntheticVideo final : public io::FrameSource {
 public:
  SyntheticVideo(SyntheticSpec spec, std::uint64_t seed,
                 const facegeom::CanonicalMesh& mesh = facegeom::CanonicalMesh::builtin());

  std::size_t size() const override { return frames_; }
  double fs() const override { return spec_.fs; }
  int width() const override { return width_; }
  int height() const override { return height_; }
  /// 8-bit frame: render() rounded and clamped.
  Image8 frame(std::size_t index) const override;
  /// Unquantized frame on the 0..255 scale.
  ImageF render(std::size_t index) const;

  const facegeom::LandmarkSequence& landmarks() const noexcept { return landmarks_; }
  /// s(t) sampled at spec.reference_fs.
  const dsp::Signal1D& reference() const noexcept { return reference_; }
  const SyntheticSpec& spec() const noexcept { return spec_; }
  const facegeom::CanonicalMesh& mesh() const noexcept { return mesh_; }

  double pulse(double t) const;
  double bpm_at(double t) const;
  /// Canonical-to-source similarity at time t: source = R (q - c) + c + offset.
  facegeom::Point to_source(const facegeom::Point& q, double t) const;
  /// Injected grid cells as a per-cell flag.
  const std::vector<bool>& injected() const noexcept { return injected_; }

 private:
  double phase(double t) const;
  void build_texture();

  SyntheticSpec spec_;
  std::uint64_t seed_;
  const facegeom::CanonicalMesh& mesh_;
  std::size_t frames_ = 0;
  int width_ = 0, height_ = 0;
  double ox0_ = 0.0, oy0_ = 0.0;
  std::vector<float> texture_;   // canonical RGB, 0..255
  std::vector<float> face_mask_;  // 1 inside the head ellipse
  std::vector<int> cell_;        // grid cell of each canonical pixel
  std::vector<bool> injected_;
  std::vector<float> background_;
  facegeom::LandmarkSequence landmarks_;
  dsp::Signal1D reference_;
};

/// Canonical landmarks carried into a video's source frame at time t (no jitter).
facegeom::LandmarkFrame source_landmarks(const SyntheticVideo& v, double t);

}  // namespace fp::synth
