#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facepulse/dsp.hpp"
#include "facepulse/facegeom.hpp"
#include "facepulse/image.hpp"
#include "facepulse/spectral.hpp"

namespace fp::io {

namespace fs = std::filesystem;

/// Random-access frame provider. frame() must be safe to call concurrently.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual double fs() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual Image8 frame(std::size_t index) const = 0;
};

class MemoryFrameSource final : public FrameSource {
 public:
  MemoryFrameSource(std::vector<Image8> frames, double fs);

  std::size_t size() const override { return frames_.size(); }
  double fs() const override { return fs_; }
  int width() const override { return frames_.empty() ? 0 : frames_.front().width; }
  int height() const override { return frames_.empty() ? 0 : frames_.front().height; }
  Image8 frame(std::size_t index) const override { return frames_.at(index); }

 private:
  std::vector<Image8> frames_;
  double fs_;
};

/// Frame directory (000001.png ... plus "meta") or raw "F2PRAW1" container.
/// Frames are decoded on demand; the constructor validates the index range.
std::unique_ptr<FrameSource> open_frames(const fs::path& source);

struct LoadedFrames {
  std::vector<Image8> frames;
  double fs = 0.0;
};
LoadedFrames load_frames(const fs::path& source);

/// Lossless numbered PNGs starting at 000001 plus the "meta" sidecar.
void write_frame_dir(const fs::path& dir, const FrameSource& src);
/// Magic "F2PRAW1", u32 width, u32 height, u32 count, f64 fs (little endian),
/// then planar 8-bit R, G, B planes per frame.
void write_raw(const fs::path& file, const FrameSource& src);

/// Landmark CSV: header "frame,x0,y0,...", 68 or 85 points per row.
/// Frames without a row (or with all coordinates empty) are absent.
facegeom::LandmarkSequence load_landmarks(const fs::path& path, std::size_t n_frames = 0);
void write_landmarks(const fs::path& path, const facegeom::LandmarkSequence& lms);

/// Reference CSV: one value per line, or "t,value[,value...]" with a header.
/// Timestamped input is resampled linearly onto a uniform grid at `fs`.
/// `channel` picks the value column for multi-channel files.
dsp::Signal1D load_reference(const fs::path& path, double fs, int channel = 0);
void write_reference(const fs::path& path, const dsp::Signal1D& s, bool with_time = true);

struct VideoEntry {
  std::string id;
  fs::path frames;
  fs::path landmarks;
  fs::path reference;
  spectral::ReferenceKind reference_kind = spectral::ReferenceKind::bvp;
  double reference_fs = 0.0;
  std::string scenario;
  std::optional<int> ecg_channel;
};

struct DatasetDescriptor {
  std::string name;
  fs::path root;
  std::vector<VideoEntry> videos;
  std::optional<double> alignment_lag_s;
  /// Filled by load_dataset: "<video id>: <missing path>".
  std::vector<std::string> missing;
};

/// JSON descriptor; relative paths resolve against `root`, which itself
/// resolves against the descriptor's directory.
DatasetDescriptor load_dataset(const fs::path& path);
void save_dataset(const fs::path& path, const DatasetDescriptor& d);

}  // namespace fp::io
