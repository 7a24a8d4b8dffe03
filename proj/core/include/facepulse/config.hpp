#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "facepulse/dsp.hpp"
#include "facepulse/regions.hpp"
#include "facepulse/rppg.hpp"
#include "facepulse/spectral.hpp"
#include "facepulse/synth.hpp"

namespace fp::config {

enum class Pipeline { improved, normalized_single, multi_region };
enum class FilterStage { pre, post, both };
/// grid: DMRS over the n x n grid (multi_region) or the whole face
/// (normalized_single). face, forehead, cheeks, combined: fixed regions,
/// all of them aggregated.
enum class RegionMode { grid, face, forehead, cheeks, combined };
/// Improved pipeline only: follow the landmarks every frame, or freeze the
/// regions found on the first valid frame.
enum class Crop { tracked, fixed };
/// Apply the RGB->PPG method per analysis window, or once over the whole
/// trace before windowing.
enum class WindowOrder { pre_conversion, post_conversion };
enum class AlignmentMode { per_video, dataset };

std::string_view to_string(Pipeline p) noexcept;
std::string_view to_string(FilterStage f) noexcept;
std::string_view to_string(RegionMode m) noexcept;
std::string_view to_string(Crop c) noexcept;
std::string_view to_string(WindowOrder w) noexcept;
std::string_view to_string(AlignmentMode a) noexcept;

/// Parsers throw Errc::config naming the accepted values.
Pipeline parse_pipeline(std::string_view s);
FilterStage parse_filter_stage(std::string_view s);
RegionMode parse_region_mode(std::string_view s);
Crop parse_crop(std::string_view s);
WindowOrder parse_window_order(std::string_view s);
AlignmentMode parse_alignment_mode(std::string_view s);

struct PipelineConfig {
  Pipeline pipeline = Pipeline::multi_region;
  rppg::Method method = rppg::Method::omit;
  regions::SelectionConfig selection{};
  regions::StatsOptions stats{};
  dsp::BandpassSpec bandpass{};  // num_taps 0: scaled to the video rate
  bool detrend = true;
  spectral::SpectralConfig spectral{};
  FilterStage filter = FilterStage::pre;
  RegionMode region_mode = RegionMode::grid;
  Crop crop = Crop::tracked;
  WindowOrder window_order = WindowOrder::pre_conversion;
  rppg::MethodOptions method_options{};
  AlignmentMode alignment = AlignmentMode::dataset;
  double max_lag_s = 3.0;
  std::uint64_t seed = 0;

  /// Throws Errc::config. 2SR needs canonical pixels, so it is rejected with
  /// the improved pipeline.
  void validate() const;
  /// Band-pass design for a given sampling rate.
  dsp::BandpassSpec bandpass_for(double fs) const;
};

/// JSON text; unknown keys are rejected so typos do not silently fall back
/// to defaults. Missing keys keep their defaults.
PipelineConfig parse_config(std::string_view json);
PipelineConfig load_config(const std::filesystem::path& path);
/// Every key with its effective value.
std::string to_json(const PipelineConfig& cfg);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

/// Synthetic video description stored next to a generated dataset.
struct SynthFile {
  synth::SyntheticSpec spec;
  std::uint64_t seed = 0;
};
SynthFile load_synth(const std::filesystem::path& path);
void save_synth(const std::filesystem::path& path, const SynthFile& f);

}  // namespace fp::config
