#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fp::cli {

// Flags shared by extract and evaluate; unset values keep the config's.
struct PipelineFlags {
  std::string config;
  std::string method;  // evaluate: comma-separated list
  std::string pipeline;
  std::string region_mode;
  std::string crop;
  std::optional<int> grid;
  std::optional<std::uint64_t> seed;
};

struct ExtractArgs {
  PipelineFlags flags;
  std::string frames, landmarks, reference, reference_kind = "bvp";
  double reference_fs = 0.0;
  std::optional<int> ecg_channel;
  std::string out;
};

struct EvaluateArgs {
  PipelineFlags flags;
  std::string dataset;
  bool grid_sweep = false;
  unsigned jobs = 1;
  std::string out;
  bool plots = false;
};

struct SynthArgs {
  std::string out;
  int suite = 1;
  std::uint64_t seed = 1;
  double duration = 60.0, fs = 30.0;
  std::optional<double> hr;  // fixed HR; otherwise drawn per video
  double hr_min = 48.0, hr_max = 180.0;
  double amplitude = 0.01, noise = 2.0, region_noise = 0.0;
  double vx = 0.0, vy = 0.0, jitter = 0.0, rotation_deg = 0.0, rotation_hz = 0.0;
  std::vector<int> injected;
  std::string frames = "spec";  // spec | png | raw
  std::string scenario;
};

struct PlotsArgs {
  std::string run;
  bool log_scale = false;
};

int run_extract(const ExtractArgs& a);
int run_evaluate(const EvaluateArgs& a);
int run_synth(const SynthArgs& a);
int run_plots(const PlotsArgs& a);
int run_config(const PipelineFlags& f, const std::string& out);

}  // namespace fp::cli
