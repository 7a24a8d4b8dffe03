#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facepulse/image.hpp"

namespace fp::facegeom {

inline constexpr std::size_t kBaseLandmarks = 68;
inline constexpr std::size_t kExtendedLandmarks = 85;
inline constexpr std::size_t kMeshTriangles = 131;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Landmarks of one frame. The first 68 points follow the Multi-PIE scheme;
/// extended frames carry 17 more forehead points (68..84):
///   68..77  eyebrow points 17..26 lifted away from the jaw line
///   78      glabella apex
///   79..84  outer forehead arc, left to right
struct LandmarkFrame {
  std::vector<Point> points;
  std::int64_t frame_index = 0;
  std::optional<double> confidence;
};

/// Per-frame landmarks; std::nullopt marks frames without a detection.
using LandmarkSequence = std::vector<std::optional<LandmarkFrame>>;

struct Triangle {
  std::array<int, 3> v{};
};

/// Fixed 85-vertex, 131-triangle face template on a W_c x H_c raster.
/// Immutable after construction; the builtin instance is shared.
class CanonicalMesh {
 public:
  static const CanonicalMesh& builtin();
  /// Parses the versioned text format and verifies its CRC-32.
  static CanonicalMesh parse(std::string_view text);
  static CanonicalMesh load(const std::filesystem::path& path);

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::string& version() const noexcept { return version_; }
  std::uint32_t checksum() const noexcept { return checksum_; }

  /// Signed area (positive for the stored orientation).
  double triangle_area(std::size_t t) const;

  /// Triangle covering each canonical pixel center, -1 outside the mesh.
  const std::vector<int>& pixel_triangle() const noexcept { return pixel_triangle_; }
  /// Barycentric weights of each covered pixel inside its triangle.
  const std::vector<std::array<double, 3>>& pixel_weights() const noexcept { return pixel_weights_; }
  bool covers(int x, int y) const { return pixel_triangle_[static_cast<std::size_t>(y) * width_ + x] >= 0; }
  std::size_t covered_pixels() const noexcept { return covered_; }

  LandmarkFrame canonical_landmarks() const;

 private:
  void rasterize();

  std::string version_;
  std::uint32_t checksum_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<int> pixel_triangle_;
  std::vector<std::array<double, 3>> pixel_weights_;
  std::size_t covered_ = 0;
};

/// 68 -> 85 points. 85-point input passes through unchanged.
/// Throws Errc::degenerate_face for collinear input.
LandmarkFrame extend_landmarks(const LandmarkFrame& lm);

/// Bookkeeping from one warp: triangles whose source area fell below the
/// threshold are left zero and listed here.
struct WarpReport {
  std::vector<int> degenerate_triangles;
};

inline constexpr double kMinSourceTriangleArea = 0.5;  // px^2

/// Piecewise-affine warp of a frame into canonical coordinates with bilinear,
/// edge-clamped sampling. Pixels outside the mesh are zero.
ImageF warp_to_canonical(const Image8& frame, const LandmarkFrame& lm85, const CanonicalMesh& mesh,
                         WarpReport* report = nullptr);
void warp_to_canonical(const Image8& frame, const LandmarkFrame& lm85, const CanonicalMesh& mesh,
                       ImageF& out, WarpReport* report = nullptr);

struct NormalizedFaceStack {
  std::vector<ImageF> frames;
  double fs = 0.0;
  std::vector<bool> valid;

  std::size_t size() const noexcept { return frames.size(); }
};

/// Warps every frame; frames without landmarks repeat the previous valid
/// raster (leading gaps take the first valid one) and are marked invalid.
/// Throws Errc::empty_stack when no frame has landmarks.
NormalizedFaceStack normalize_sequence(std::span<const Image8> frames, const LandmarkSequence& lms,
                                       const CanonicalMesh& mesh, double fs);

/// Axis-aligned bounds of a landmark set.
struct Bounds {
  double x0, y0, x1, y1;
};
Bounds bounds(std::span<const Point> pts);

}  // namespace fp::facegeom
