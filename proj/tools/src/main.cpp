#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "facepulse/error.hpp"

namespace {

// Exit codes: 0 success, 2 configuration error, 3 data error, 4 partial run.
constexpr int kConfigError = 2;
constexpr int kDataError = 3;

void add_pipeline_flags(CLI::App* cmd, fp::cli::PipelineFlags& f, bool many_methods) {
  cmd->add_option("--config", f.config, "JSON pipeline configuration")->check(CLI::ExistingFile);
  cmd->add_option("--method", f.method,
                  many_methods ? "Methods, comma separated (green,ica,pca,chrom,pbv,2sr,lab,pos,lgi,omit)"
                               : "Method (green,ica,pca,chrom,pbv,2sr,lab,pos,lgi,omit)");
  cmd->add_option("--pipeline", f.pipeline, "improved | normalized_single | multi_region");
  cmd->add_option("--regions", f.region_mode, "grid | face | forehead | cheeks | combined");
  cmd->add_option("--crop", f.crop, "Improved pipeline crop: tracked | fixed");
  cmd->add_option("--grid", f.grid, "Grid side n for multi_region");
  cmd->add_option("--seed", f.seed, "Seed for stochastic methods (ICA)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"facepulse: remote photoplethysmography from facial video and landmarks"};
  app.require_subcommand(1);

  fp::cli::ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Extract the pulse and HR series of one video");
  extract->add_option("--frames", ex.frames, "Frame directory, raw container or synthetic *.json")->required();
  extract->add_option("--landmarks", ex.landmarks, "Landmark CSV")->required()->check(CLI::ExistingFile);
  extract->add_option("--reference", ex.reference, "Reference CSV for a metrics report")->check(CLI::ExistingFile);
  extract->add_option("--reference-fs", ex.reference_fs, "Reference sampling rate (Hz)");
  extract->add_option("--reference-kind", ex.reference_kind, "bvp | ecg");
  extract->add_option("--ecg-channel", ex.ecg_channel, "ECG value column");
  extract->add_option("--out", ex.out, "Output directory");
  add_pipeline_flags(extract, ex.flags, false);

  fp::cli::EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate methods over a dataset descriptor");
  evaluate->add_option("--dataset", ev.dataset, "Dataset descriptor JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_flag("--grid-sweep", ev.grid_sweep, "Sweep the grid side over 6..11");
  evaluate->add_option("--jobs", ev.jobs, "Videos processed in parallel")->check(CLI::PositiveNumber);
  evaluate->add_option("--out", ev.out, "Run directory (default: run)");
  evaluate->add_flag("--plots", ev.plots, "Render plots after the run");
  add_pipeline_flags(evaluate, ev.flags, true);

  fp::cli::SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", sy.out, "Output directory (default: synthetic)");
  synth->add_option("--suite", sy.suite, "Number of videos");
  synth->add_option("--seed", sy.seed, "Suite seed");
  synth->add_option("--duration", sy.duration, "Seconds per video");
  synth->add_option("--fs", sy.fs, "Frame rate");
  synth->add_option("--hr", sy.hr, "Fixed heart rate (bpm); otherwise drawn from --hr-min..--hr-max");
  synth->add_option("--hr-min", sy.hr_min);
  synth->add_option("--hr-max", sy.hr_max);
  synth->add_option("--amplitude", sy.amplitude, "Pulse amplitude, fraction of the base color");
  synth->add_option("--noise", sy.noise, "Per-pixel noise sigma (8-bit levels)");
  synth->add_option("--region-noise", sy.region_noise, "Per-cell noise sigma (8-bit levels)");
  synth->add_option("--vx", sy.vx, "Translation, px/s");
  synth->add_option("--vy", sy.vy, "Translation, px/s");
  synth->add_option("--jitter", sy.jitter, "Landmark jitter sigma, px");
  synth->add_option("--rotation-deg", sy.rotation_deg, "In-plane rotation amplitude");
  synth->add_option("--rotation-hz", sy.rotation_hz, "In-plane rotation frequency");
  synth->add_option("--inject", sy.injected, "Grid cells carrying the pulse (default: all)")->delimiter(',');
  synth->add_option("--frames", sy.frames, "spec (render on demand) | png | raw");
  synth->add_option("--scenario", sy.scenario, "Scenario tag for every video");

  fp::cli::PlotsArgs pl;
  auto* plots = app.add_subcommand("plots", "Render SVG plots of a finished evaluation run");
  plots->add_option("--run", pl.run, "Run directory")->required()->check(CLI::ExistingDirectory);
  plots->add_flag("--log", pl.log_scale, "Logarithmic MAE axis");

  fp::cli::PipelineFlags cf;
  std::string cf_out;
  auto* cfg = app.add_subcommand("config", "Print (or write) the effective configuration");
  add_pipeline_flags(cfg, cf, false);
  cfg->add_option("--out", cf_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*extract) return fp::cli::run_extract(ex);
    if (*evaluate) return fp::cli::run_evaluate(ev);
    if (*synth) return fp::cli::run_synth(sy);
    if (*plots) return fp::cli::run_plots(pl);
    if (*cfg) return fp::cli::run_config(cf, cf_out);
  } catch (const fp::Error& e) {
    std::cerr << "facepulse: " << e.what() << '\n';
    return e.code() == fp::Errc::config ? kConfigError : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "facepulse: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
