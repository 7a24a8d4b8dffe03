#include "facepulse/config.hpp"

#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "facepulse/error.hpp"

namespace fp::config {

using nlohmann::json;

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table, std::string_view what) {
  for (const auto& [name, value] : table)
    if (name == s) return value;
  std::string accepted;
  for (const auto& [name, value] : table) accepted += (accepted.empty() ? "" : ", ") + std::string(name);
  fail(Errc::config, "unknown " + std::string(what) + " '" + std::string(s) + "' (accepted: " + accepted + ")");
}

template <class E, std::size_t N>
std::string_view enum_name(E v, const std::array<std::pair<std::string_view, E>, N>& table) noexcept {
  for (const auto& [name, value] : table)
    if (value == v) return name;
  return "?";
}

constexpr std::array<std::pair<std::string_view, Pipeline>, 3> kPipelines{{
    {"improved", Pipeline::improved},
    {"normalized_single", Pipeline::normalized_single},
    {"multi_region", Pipeline::multi_region},
}};
constexpr std::array<std::pair<std::string_view, FilterStage>, 3> kFilters{{
    {"pre", FilterStage::pre},
    {"post", FilterStage::post},
    {"both", FilterStage::both},
}};
constexpr std::array<std::pair<std::string_view, RegionMode>, 5> kRegionModes{{
    {"grid", RegionMode::grid},
    {"face", RegionMode::face},
    {"forehead", RegionMode::forehead},
    {"cheeks", RegionMode::cheeks},
    {"combined", RegionMode::combined},
}};
constexpr std::array<std::pair<std::string_view, Crop>, 2> kCrops{{
    {"tracked", Crop::tracked},
    {"fixed", Crop::fixed},
}};
constexpr std::array<std::pair<std::string_view, WindowOrder>, 2> kOrders{{
    {"pre_conversion", WindowOrder::pre_conversion},
    {"post_conversion", WindowOrder::post_conversion},
}};
constexpr std::array<std::pair<std::string_view, AlignmentMode>, 2> kAlignments{{
    {"per_video", AlignmentMode::per_video},
    {"dataset", AlignmentMode::dataset},
}};
constexpr std::array<std::pair<std::string_view, regions::KfdMode>, 2> kKfdModes{{
    {"relative", regions::KfdMode::relative},
    {"absolute", regions::KfdMode::absolute},
}};
constexpr std::array<std::pair<std::string_view, regions::ChannelMix>, 4> kChannels{{
    {"green", regions::ChannelMix::green},
    {"red", regions::ChannelMix::red},
    {"blue", regions::ChannelMix::blue},
    {"mean_rgb", regions::ChannelMix::mean_rgb},
}};

// Reads keys of one JSON object, remembering which were consumed so leftover
// (misspelled) keys can be reported.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(Errc::config, where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(Errc::config, "bad value for " + where(key));
    }
  }

  template <class E, std::size_t N>
  void get_enum(const char* key, E& out, const std::array<std::pair<std::string_view, E>, N>& table) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_string()) fail(Errc::config, where(key) + " must be a string");
    out = parse_enum(j_.at(key).get<std::string>(), table, where(key));
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  Reader child(const char* key) { return Reader(j_.at(key), where(key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) fail(Errc::config, "unknown key " + where(key.c_str()));
  }

 private:
  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "" : path_;
    if (key) p += (p.empty() ? "" : ".") + std::string(key);
    return p.empty() ? "config" : "'" + p + "'";
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json parse_text(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(Errc::config, std::string(what) + ": " + e.what());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::config, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::data, "cannot write " + path.string());
  out << text << '\n';
}

}  // namespace

std::string_view to_string(Pipeline p) noexcept { return enum_name(p, kPipelines); }
std::string_view to_string(FilterStage f) noexcept { return enum_name(f, kFilters); }
std::string_view to_string(RegionMode m) noexcept { return enum_name(m, kRegionModes); }
std::string_view to_string(Crop c) noexcept { return enum_name(c, kCrops); }
std::string_view to_string(WindowOrder w) noexcept { return enum_name(w, kOrders); }
std::string_view to_string(AlignmentMode a) noexcept { return enum_name(a, kAlignments); }

Pipeline parse_pipeline(std::string_view s) { return parse_enum(s, kPipelines, "pipeline"); }
FilterStage parse_filter_stage(std::string_view s) { return parse_enum(s, kFilters, "filter stage"); }
RegionMode parse_region_mode(std::string_view s) { return parse_enum(s, kRegionModes, "region mode"); }
Crop parse_crop(std::string_view s) { return parse_enum(s, kCrops, "crop"); }
WindowOrder parse_window_order(std::string_view s) { return parse_enum(s, kOrders, "window order"); }
AlignmentMode parse_alignment_mode(std::string_view s) { return parse_enum(s, kAlignments, "alignment mode"); }

void PipelineConfig::validate() const {
  try {
    selection.validate();
  } catch (const Error& e) {
    fail(Errc::config, e.what());
  }
  if (rppg::requires_pixels(method) && pipeline == Pipeline::improved)
    fail(Errc::config, "method 2sr needs canonical pixels; use a normalized pipeline");
  if (!(spectral.band_lo > 0.0 && spectral.band_lo < spectral.band_hi))
    fail(Errc::config, "spectral band must satisfy 0 < band_lo < band_hi");
  if (!(bandpass.low_hz > 0.0 && bandpass.low_hz < bandpass.high_hz))
    fail(Errc::config, "bandpass must satisfy 0 < low_hz < high_hz");
  if (bandpass.num_taps < 0 || (bandpass.num_taps > 0 && bandpass.num_taps % 2 == 0))
    fail(Errc::config, "bandpass.num_taps must be odd (or 0 for the rate-scaled default)");
  if (!(spectral.win_s > 0.0 && spectral.step_s > 0.0)) fail(Errc::config, "window and step must be positive");
  if (selection.window_s != spectral.win_s)
    fail(Errc::config, "selection.window_s must equal spectral.win_s (one analysis window)");
  if (!(spectral.welch.overlap_frac >= 0.0 && spectral.welch.overlap_frac < 1.0))
    fail(Errc::config, "welch.overlap_frac must lie in [0, 1)");
  if (!(spectral.gaps.max_invalid_frac >= 0.0 && spectral.gaps.max_invalid_frac <= 1.0))
    fail(Errc::config, "gaps.max_invalid_frac must lie in [0, 1]");
  if (!(method_options.pos_window_s > 0.0)) fail(Errc::config, "pos_window_s must be positive");
  if (!(max_lag_s >= 0.0)) fail(Errc::config, "max_lag_s must be non-negative");
}

dsp::BandpassSpec PipelineConfig::bandpass_for(double fs) const {
  if (bandpass.num_taps > 0) return bandpass;
  return dsp::BandpassSpec::for_rate(fs, bandpass.low_hz, bandpass.high_hz, bandpass.beta);
}

PipelineConfig parse_config(std::string_view text) {
  const json j = parse_text(text, "config");
  PipelineConfig c;
  Reader r(j, "");
  r.get_enum("pipeline", c.pipeline, kPipelines);
  if (r.has("method")) {
    std::string m;
    r.get("method", m);
    c.method = rppg::parse_method(m);
  }
  if (r.has("selection")) {
    auto s = r.child("selection");
    s.get("grid_n", c.selection.grid_n);
    s.get("kfd_threshold", c.selection.kfd_threshold);
    s.get_enum("kfd_mode", c.selection.kfd_mode, kKfdModes);
    s.get("dfa_low", c.selection.dfa_low);
    s.get("dfa_high", c.selection.dfa_high);
    s.get("max_regions", c.selection.max_regions);
    s.get("window_s", c.selection.window_s);
    s.finish();
  }
  if (r.has("stats")) {
    auto s = r.child("stats");
    s.get_enum("channel", c.stats.channel, kChannels);
    s.finish();
  }
  if (r.has("bandpass")) {
    auto s = r.child("bandpass");
    s.get("low_hz", c.bandpass.low_hz);
    s.get("high_hz", c.bandpass.high_hz);
    s.get("beta", c.bandpass.beta);
    s.get("num_taps", c.bandpass.num_taps);
    s.finish();
  }
  r.get("detrend", c.detrend);
  if (r.has("spectral")) {
    auto s = r.child("spectral");
    s.get("band_lo", c.spectral.band_lo);
    s.get("band_hi", c.spectral.band_hi);
    s.get("win_s", c.spectral.win_s);
    s.get("step_s", c.spectral.step_s);
    if (s.has("welch")) {
      auto w = s.child("welch");
      w.get("seg_len", c.spectral.welch.seg_len);
      w.get("overlap_frac", c.spectral.welch.overlap_frac);
      w.get("nfft", c.spectral.welch.nfft);
      w.finish();
    }
    if (s.has("gaps")) {
      auto g = s.child("gaps");
      g.get("eps_frac", c.spectral.gaps.eps_frac);
      g.get("min_duration_s", c.spectral.gaps.min_duration_s);
      g.get("max_invalid_frac", c.spectral.gaps.max_invalid_frac);
      g.finish();
    }
    s.finish();
  }
  r.get_enum("filter", c.filter, kFilters);
  r.get_enum("region_mode", c.region_mode, kRegionModes);
  r.get_enum("crop", c.crop, kCrops);
  r.get_enum("window_order", c.window_order, kOrders);
  if (r.has("method_options")) {
    auto s = r.child("method_options");
    s.get("pbv_signature", c.method_options.pbv_signature);
    s.get("ica_max_iter", c.method_options.ica_max_iter);
    s.get("ica_tol", c.method_options.ica_tol);
    s.get("pos_window_s", c.method_options.pos_window_s);
    s.get("omit_normalize", c.method_options.omit_normalize);
    s.finish();
  }
  r.get_enum("alignment", c.alignment, kAlignments);
  r.get("max_lag_s", c.max_lag_s);
  r.get("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(slurp(path)); }

std::string to_json(const PipelineConfig& c) {
  json j;
  j["pipeline"] = to_string(c.pipeline);
  j["method"] = rppg::method_name(c.method);
  j["selection"] = {{"grid_n", c.selection.grid_n},
                    {"kfd_threshold", c.selection.kfd_threshold},
                    {"kfd_mode", enum_name(c.selection.kfd_mode, kKfdModes)},
                    {"dfa_low", c.selection.dfa_low},
                    {"dfa_high", c.selection.dfa_high},
                    {"max_regions", c.selection.max_regions},
                    {"window_s", c.selection.window_s}};
  j["stats"] = {{"channel", enum_name(c.stats.channel, kChannels)}};
  j["bandpass"] = {{"low_hz", c.bandpass.low_hz},
                   {"high_hz", c.bandpass.high_hz},
                   {"beta", c.bandpass.beta},
                   {"num_taps", c.bandpass.num_taps}};
  j["detrend"] = c.detrend;
  j["spectral"] = {{"band_lo", c.spectral.band_lo},
                   {"band_hi", c.spectral.band_hi},
                   {"win_s", c.spectral.win_s},
                   {"step_s", c.spectral.step_s},
                   {"welch",
                    {{"seg_len", c.spectral.welch.seg_len},
                     {"overlap_frac", c.spectral.welch.overlap_frac},
                     {"nfft", c.spectral.welch.nfft}}},
                   {"gaps",
                    {{"eps_frac", c.spectral.gaps.eps_frac},
                     {"min_duration_s", c.spectral.gaps.min_duration_s},
                     {"max_invalid_frac", c.spectral.gaps.max_invalid_frac}}}};
  j["filter"] = to_string(c.filter);
  j["region_mode"] = to_string(c.region_mode);
  j["crop"] = to_string(c.crop);
  j["window_order"] = to_string(c.window_order);
  j["method_options"] = {{"pbv_signature", c.method_options.pbv_signature},
                         {"ica_max_iter", c.method_options.ica_max_iter},
                         {"ica_tol", c.method_options.ica_tol},
                         {"pos_window_s", c.method_options.pos_window_s},
                         {"omit_normalize", c.method_options.omit_normalize}};
  j["alignment"] = to_string(c.alignment);
  j["max_lag_s"] = c.max_lag_s;
  j["seed"] = c.seed;
  return j.dump(2);
}

void save_config(const std::filesystem::path& path, const PipelineConfig& cfg) { spit(path, to_json(cfg)); }

SynthFile load_synth(const std::filesystem::path& path) {
  const json j = parse_text(slurp(path), path.string());
  SynthFile f;
  auto& s = f.spec;
  Reader r(j, "");
  r.get("seed", f.seed);
  r.get("duration_s", s.duration_s);
  r.get("fs", s.fs);
  if (r.has("hr")) {
    const auto& arr = j.at("hr");
    if (!arr.is_array() || arr.empty()) fail(Errc::config, "'hr' must be a non-empty array of [start_s, bpm]");
    s.hr.clear();
    for (const auto& e : arr) {
      if (!e.is_array() || e.size() != 2) fail(Errc::config, "'hr' entries must be [start_s, bpm]");
      s.hr.push_back({e[0].get<double>(), e[1].get<double>()});
    }
  }
  r.get("amplitude", s.amplitude);
  r.get("pulsatility", s.pulsatility);
  r.get("harmonic", s.harmonic);
  r.get("grid_n", s.grid_n);
  r.get("injected_regions", s.injected_regions);
  r.get("noise_sigma", s.noise_sigma);
  r.get("region_noise_sigma", s.region_noise_sigma);
  r.get("vx", s.vx);
  r.get("vy", s.vy);
  r.get("rotation_amp_deg", s.rotation_amp_deg);
  r.get("rotation_hz", s.rotation_hz);
  r.get("landmark_jitter", s.landmark_jitter);
  r.get("base_width", s.base_width);
  r.get("base_height", s.base_height);
  r.get("reference_fs", s.reference_fs);
  r.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    fail(Errc::config, path.string() + ": " + e.what());
  }
  return f;
}

void save_synth(const std::filesystem::path& path, const SynthFile& f) {
  const auto& s = f.spec;
  json hr = json::array();
  for (const auto& seg : s.hr) hr.push_back({seg.start_s, seg.bpm});
  const json j = {{"seed", f.seed},
                  {"duration_s", s.duration_s},
                  {"fs", s.fs},
                  {"hr", hr},
                  {"amplitude", s.amplitude},
                  {"pulsatility", s.pulsatility},
                  {"harmonic", s.harmonic},
                  {"grid_n", s.grid_n},
                  {"injected_regions", s.injected_regions},
                  {"noise_sigma", s.noise_sigma},
                  {"region_noise_sigma", s.region_noise_sigma},
                  {"vx", s.vx},
                  {"vy", s.vy},
                  {"rotation_amp_deg", s.rotation_amp_deg},
                  {"rotation_hz", s.rotation_hz},
                  {"landmark_jitter", s.landmark_jitter},
                  {"base_width", s.base_width},
                  {"base_height", s.base_height},
                  {"reference_fs", s.reference_fs}};
  spit(path, j.dump(2));
}

}  // namespace fp::config
