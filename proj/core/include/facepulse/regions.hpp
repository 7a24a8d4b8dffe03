#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "facepulse/dsp.hpp"
#include "facepulse/facegeom.hpp"
#include "facepulse/image.hpp"

namespace fp::regions {

/// Half-open pixel rectangle in canonical coordinates.
struct RegionBox {
  int id = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  std::size_t area() const noexcept { return static_cast<std::size_t>(width()) * height(); }
  friend bool operator==(const RegionBox&, const RegionBox&) = default;
};

/// Row-major n x n tiling; the first (w mod n) columns (rows) are one pixel wider.
std::vector<RegionBox> grid_partition(int width, int height, int n);

/// Per-frame mean RGB of one region. `moments` holds, when requested, the
/// per-frame mean outer product over skin pixels (rr, gg, bb, rg, rb, gb),
/// which is everything 2SR needs from the pixels.
struct RgbTrace {
  std::vector<double> r, g, b;
  double fs = 0.0;
  int region_id = 0;
  std::vector<std::array<double, 6>> moments;

  std::size_t size() const noexcept { return g.size(); }
  RgbTrace slice(std::size_t start, std::size_t len) const;
};

/// Streaming trace extraction: feed canonical frames one at a time.
/// Box means include every box pixel; moments use only covered pixels.
class TraceAccumulator {
 public:
  TraceAccumulator(std::vector<RegionBox> boxes, double fs, const facegeom::CanonicalMesh* mesh = nullptr,
                   bool with_moments = false);

  void push(const ImageF& frame);
  const std::vector<RgbTrace>& traces() const noexcept { return traces_; }
  std::vector<RgbTrace> take() && { return std::move(traces_); }
  const std::vector<RegionBox>& boxes() const noexcept { return boxes_; }

 private:
  std::vector<RegionBox> boxes_;
  std::vector<RgbTrace> traces_;
  const facegeom::CanonicalMesh* mesh_;
  bool with_moments_;
};

std::vector<RgbTrace> extract_traces(const facegeom::NormalizedFaceStack& stack, std::span<const RegionBox> boxes);

/// Katz fractal dimension with unit x-step. Throws Errc::undefined_kfd for constant input.
double katz_fd(std::span<const double> x);

/// Detrended fluctuation exponent over ~10 log-spaced boxes in [4, N/4].
/// Throws Errc::invalid_input below 64 samples.
double dfa_alpha(std::span<const double> x);

enum class DfaClass { anti_correlated, uncorrelated, correlated, non_stationary };
/// alpha < 0.45 anti, [0.45, 0.55] uncorrelated, (0.55, 1.0] correlated, above 1 non-stationary.
DfaClass classify_dfa(double alpha) noexcept;

/// SampEn(m, r); r is absolute. Returns +inf when no template of length m+1 matches.
double sample_entropy(std::span<const double> x, int m = 2, double r = -1.0);

std::size_t zero_crossings(std::span<const double> x);

enum class ChannelMix { green, red, blue, mean_rgb };

struct RegionStats {
  int region_id = 0;
  double mean = 0.0;
  double std = 0.0;
  double variance = 0.0;
  double snr_db = 0.0;
  double kfd = 0.0;
  bool kfd_defined = false;
  std::size_t zero_crossings = 0;
  double sample_entropy = 0.0;
  double dfa_alpha = 0.0;
  bool dfa_defined = false;
  double psd_energy = 0.0;
};

struct StatsOptions {
  ChannelMix channel = ChannelMix::green;
  double band_lo = 0.75;
  double band_hi = 4.0;
  double beta = 25.0;
};

/// Mean/std/variance on the raw channel; the rest on the detrended, band-passed
/// channel (KFD, DFA, entropy and zero crossings after z-normalization).
RegionStats compute_region_stats(const RgbTrace& trace, const StatsOptions& opt = {});

enum class KfdMode { relative, absolute };

struct SelectionConfig {
  int grid_n = 9;
  double kfd_threshold = 0.85;
  KfdMode kfd_mode = KfdMode::relative;
  double dfa_low = 0.75;
  double dfa_high = 1.0;
  std::size_t max_regions = 32;
  double window_s = 10.0;

  void validate() const;
};

struct Selection {
  std::vector<int> ids;  // ascending
  bool fallback = false;
};

/// Variance > 0, then KFD, then alpha in (dfa_low, dfa_high], then the
/// max_regions highest-energy survivors (ties to the lowest id).
Selection select_regions(std::span<const RegionStats> stats, const SelectionConfig& cfg);

struct Aggregate {
  dsp::Signal1D signal;
  bool flat = false;
};

/// Sum of the selected signals scaled to unit variance. Flat when the sum's
/// variance is below 1e-12 of the mean input variance; the output is then zero.
Aggregate aggregate_regions(std::span<const dsp::Signal1D> signals, std::span<const int> ids);

enum class PatchMode { forehead, cheeks, combined };
PatchMode parse_patch_mode(std::string_view s);

/// Forehead and cheek boxes from 85 canonical-frame landmarks.
std::vector<RegionBox> fixed_patches(const facegeom::LandmarkFrame& lm85, PatchMode mode);

/// One box around the whole mesh.
RegionBox face_box(const facegeom::LandmarkFrame& lm85);

void write_stats_header(std::ostream& os);
void write_stats_rows(std::ostream& os, double window_start, std::span<const RegionStats> stats,
                      std::span<const int> selected);

}  // namespace fp::regions
