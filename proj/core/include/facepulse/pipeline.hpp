#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "facepulse/config.hpp"
#include "facepulse/dsp.hpp"
#include "facepulse/facegeom.hpp"
#include "facepulse/io.hpp"
#include "facepulse/regions.hpp"
#include "facepulse/spectral.hpp"

namespace fp::pipeline {

/// Method-independent per-region traces of one video. Region ids index
/// `traces` directly.
struct TraceSet {
  std::vector<regions::RgbTrace> traces;
  /// Canonical boxes for the normalized pipelines; the first valid frame's
  /// source-space boxes for the improved pipeline.
  std::vector<regions::RegionBox> boxes;
  std::vector<bool> frame_valid;  // landmarks present
  double fs = 0.0;
  bool dmrs = false;  // grid regions screened per window
  config::Pipeline pipeline = config::Pipeline::multi_region;

  std::size_t frames() const noexcept { return frame_valid.size(); }
};

/// Streams the frames once: landmarks -> extension -> canonical warp (or the
/// source-space crop for the improved pipeline) -> region means. Only one
/// frame is held at a time. `with_moments` records the pixel moments 2SR needs
/// (forced on when cfg.method is 2sr).
TraceSet build_traces(const io::FrameSource& frames, const facegeom::LandmarkSequence& landmarks,
                      const config::PipelineConfig& cfg,
                      const facegeom::CanonicalMesh& mesh = facegeom::CanonicalMesh::builtin(),
                      bool with_moments = false);

/// Per-window region screening. Depends only on the traces and the filtering
/// and selection settings, so one plan serves every method.
struct SelectionPlan {
  std::vector<regions::Selection> windows;
  std::vector<std::vector<regions::RegionStats>> stats;  // DMRS only
};

SelectionPlan plan_selection(const TraceSet& ts, const config::PipelineConfig& cfg);

struct WindowDiag {
  double start_s = 0.0;
  std::vector<int> selected;
  bool fallback = false;
  bool flat = false;
  std::size_t invalid_frames = 0;
  std::optional<double> bpm;
};

struct ExtractResult {
  dsp::Signal1D bvp;  // Hann overlap-add of the per-window pulses
  spectral::HrSeries hr;
  std::vector<WindowDiag> windows;
  std::string stats_csv;  // per-window region stats, DMRS with diagnostics only
  std::size_t frames = 0;
  std::size_t invalid_frames = 0;
};

/// Windows -> method per region -> aggregation -> post-filter -> HR per
/// window. Errors carry the stage and window index.
ExtractResult run_from_traces(const TraceSet& ts, const config::PipelineConfig& cfg,
                              const SelectionPlan* plan = nullptr, bool diagnostics = false);

ExtractResult run_extract(const io::FrameSource& frames, const facegeom::LandmarkSequence& landmarks,
                          const config::PipelineConfig& cfg,
                          const facegeom::CanonicalMesh& mesh = facegeom::CanonicalMesh::builtin(),
                          bool diagnostics = false);

void write_bvp_csv(std::ostream& os, const dsp::Signal1D& bvp);
void write_hr_csv(std::ostream& os, const spectral::HrSeries& hr);
void write_windows_csv(std::ostream& os, const std::vector<WindowDiag>& windows);

}  // namespace fp::pipeline
