#pragma once

// Writes small synthetic datasets to disk for the end-to-end tests.

#include <filesystem>
#include <string>
#include <vector>

#include "facepulse/config.hpp"
#include "facepulse/io.hpp"
#include "facepulse/synth.hpp"

namespace testing_support {

inline fp::io::DatasetDescriptor write_synthetic_dataset(const std::filesystem::path& dir,
                                                        const std::vector<double>& bpms,
                                                        fp::synth::SyntheticSpec spec = {},
                                                        std::uint64_t seed = 1,
                                                        const std::vector<std::string>& scenarios = {}) {
  std::filesystem::create_directories(dir);
  fp::io::DatasetDescriptor d;
  d.name = "synthetic";
  d.root = dir;
  for (std::size_t i = 0; i < bpms.size(); ++i) {
    fp::config::SynthFile f;
    f.spec = spec;
    f.spec.hr = {{0.0, bpms[i]}};
    f.seed = seed + i;
    const fp::synth::SyntheticVideo video(f.spec, f.seed);
    fp::io::VideoEntry e;
    e.id = "v" + std::to_string(i + 1);
    e.frames = dir / (e.id + ".json");
    e.landmarks = dir / (e.id + "_landmarks.csv");
    e.reference = dir / (e.id + "_reference.csv");
    e.reference_fs = f.spec.reference_fs;
    if (i < scenarios.size()) e.scenario = scenarios[i];
    fp::config::save_synth(e.frames, f);
    fp::io::write_landmarks(e.landmarks, video.landmarks());
    fp::io::write_reference(e.reference, video.reference());
    d.videos.push_back(e);
  }
  fp::io::save_dataset(dir / "dataset.json", d);
  return fp::io::load_dataset(dir / "dataset.json");
}

}  // namespace testing_support
