#include "facepulse/io.hpp"

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "facepulse/error.hpp"
#include "facepulse/spectral.hpp"

namespace fp::io {

namespace {

constexpr char kRawMagic[7] = {'F', '2', 'P', 'R', 'A', 'W', '1'};
constexpr std::size_t kRawHeader = 7 + 4 * 3 + 8;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(v);
}

[[noreturn]] void line_error(const fs::path& p, std::size_t line, const std::string& what) {
  fail(Errc::format, p.string() + ":" + std::to_string(line) + ": " + what);
}

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  os.write(b.data(), sizeof(T));
}

template <class T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

Image8 from_mat(const cv::Mat& bgr) {
  Image8 img(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img.at(x, y, 0) = row[x][2];
      img.at(x, y, 1) = row[x][1];
      img.at(x, y, 2) = row[x][0];
    }
  }
  return img;
}

class DirFrameSource final : public FrameSource {
 public:
  explicit DirFrameSource(const fs::path& dir) : dir_(dir) {
    std::ifstream meta(dir / "meta");
    if (!meta) fail(Errc::format, "frame directory " + dir.string() + " has no meta file");
    std::string line;
    std::map<std::string, std::string> kv;
    while (std::getline(meta, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    double v = 0.0;
    if (!kv.count("fs") || !parse_double(kv["fs"], fs_) || !(fs_ > 0.0))
      fail(Errc::format, "meta file in " + dir.string() + " lacks a positive fs");
    if (kv.count("width") && parse_double(kv["width"], v)) width_ = static_cast<int>(v);
    if (kv.count("height") && parse_double(kv["height"], v)) height_ = static_cast<int>(v);

    std::map<long, fs::path> found;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string stem = e.path().stem().string();
      if (stem.size() != 6 || !std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; }))
        continue;
      found[std::stol(stem)] = e.path();
    }
    if (found.empty()) fail(Errc::format, "frame directory " + dir.string() + " holds no numbered frames");
    const long last = found.rbegin()->first;
    for (long i = 1; i <= last; ++i) {
      auto it = found.find(i);
      if (it == found.end()) fail(Errc::format, "frame " + std::to_string(i) + " missing in " + dir.string());
      files_.push_back(it->second);
    }
    if (width_ == 0 || height_ == 0) {
      const Image8 f = frame(0);
      width_ = f.width;
      height_ = f.height;
    }
  }

  std::size_t size() const override { return files_.size(); }
  double fs() const override { return fs_; }
  int width() const override { return width_; }
  int height() const override { return height_; }

  Image8 frame(std::size_t index) const override {
    const cv::Mat m = cv::imread(files_.at(index).string(), cv::IMREAD_COLOR);
    if (m.empty()) fail(Errc::format, "frame " + std::to_string(index + 1) + " is unreadable: " + files_[index].string());
    if ((width_ && m.cols != width_) || (height_ && m.rows != height_))
      fail(Errc::format, "frame " + std::to_string(index + 1) + " has unexpected dimensions");
    return from_mat(m);
  }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  double fs_ = 0.0;
  int width_ = 0, height_ = 0;
};

class RawFrameSource final : public FrameSource {
 public:
  explicit RawFrameSource(const fs::path& file) : path_(file), in_(file, std::ios::binary) {
    if (!in_) fail(Errc::format, "cannot open raw container " + file.string());
    char hdr[kRawHeader];
    if (!in_.read(hdr, kRawHeader) || std::memcmp(hdr, kRawMagic, 7) != 0)
      fail(Errc::format, file.string() + " is not an F2PRAW1 container");
    width_ = static_cast<int>(get_le<std::uint32_t>(hdr + 7));
    height_ = static_cast<int>(get_le<std::uint32_t>(hdr + 11));
    count_ = get_le<std::uint32_t>(hdr + 15);
    fs_ = get_le<double>(hdr + 19);
    if (width_ <= 0 || height_ <= 0 || !(fs_ > 0.0)) fail(Errc::format, file.string() + ": bad raw header");
    const auto need = kRawHeader + count_ * frame_bytes();
    if (fs::file_size(file) < need)
      fail(Errc::format, file.string() + ": truncated, frame " +
                             std::to_string((fs::file_size(file) - kRawHeader) / frame_bytes() + 1) + " incomplete");
  }

  std::size_t size() const override { return count_; }
  double fs() const override { return fs_; }
  int width() const override { return width_; }
  int height() const override { return height_; }

  Image8 frame(std::size_t index) const override {
    if (index >= count_) fail(Errc::format, "raw frame index " + std::to_string(index) + " out of range");
    std::vector<char> buf(frame_bytes());
    {
      std::lock_guard lock(mu_);
      in_.clear();
      in_.seekg(static_cast<std::streamoff>(kRawHeader + index * frame_bytes()));
      if (!in_.read(buf.data(), static_cast<std::streamsize>(buf.size())))
        fail(Errc::format, "raw frame " + std::to_string(index) + " unreadable");
    }
    Image8 img(width_, height_);
    const std::size_t plane = static_cast<std::size_t>(width_) * height_;
    for (std::size_t p = 0; p < plane; ++p)
      for (int c = 0; c < 3; ++c) img.data[p * 3 + c] = static_cast<std::uint8_t>(buf[c * plane + p]);
    return img;
  }

 private:
  std::size_t frame_bytes() const { return static_cast<std::size_t>(width_) * height_ * 3; }

  fs::path path_;
  mutable std::ifstream in_;
  mutable std::mutex mu_;
  int width_ = 0, height_ = 0;
  std::size_t count_ = 0;
  double fs_ = 0.0;
};

fs::path resolve(const fs::path& root, const std::string& p) {
  if (p.empty()) return {};
  const fs::path q(p);
  return q.is_absolute() ? q : root / q;
}

}  // namespace

MemoryFrameSource::MemoryFrameSource(std::vector<Image8> frames, double fs) : frames_(std::move(frames)), fs_(fs) {
  for (const auto& f : frames_)
    if (f.width != frames_.front().width || f.height != frames_.front().height)
      fail(Errc::invalid_input, "frames differ in size");
}

std::unique_ptr<FrameSource> open_frames(const fs::path& source) {
  if (fs::is_directory(source)) return std::make_unique<DirFrameSource>(source);
  if (fs::is_regular_file(source)) return std::make_unique<RawFrameSource>(source);
  fail(Errc::format, "frame source " + source.string() + " does not exist");
}

LoadedFrames load_frames(const fs::path& source) {
  const auto src = open_frames(source);
  LoadedFrames out;
  out.fs = src->fs();
  out.frames.reserve(src->size());
  for (std::size_t i = 0; i < src->size(); ++i) out.frames.push_back(src->frame(i));
  return out;
}

void write_frame_dir(const fs::path& dir, const FrameSource& src) {
  fs::create_directories(dir);
  {
    std::ofstream meta(dir / "meta");
    meta.precision(17);
    meta << "fs=" << src.fs() << "\nwidth=" << src.width() << "\nheight=" << src.height() << "\n";
  }
  char name[16];
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Image8 f = src.frame(i);
    cv::Mat m(f.height, f.width, CV_8UC3);
    for (int y = 0; y < f.height; ++y) {
      auto* row = m.ptr<cv::Vec3b>(y);
      for (int x = 0; x < f.width; ++x) row[x] = {f.at(x, y, 2), f.at(x, y, 1), f.at(x, y, 0)};
    }
    std::snprintf(name, sizeof name, "%06zu.png", i + 1);
    if (!cv::imwrite((dir / name).string(), m)) fail(Errc::format, "cannot write frame " + (dir / name).string());
  }
}

void write_raw(const fs::path& file, const FrameSource& src) {
  std::ofstream os(file, std::ios::binary);
  if (!os) fail(Errc::format, "cannot write " + file.string());
  os.write(kRawMagic, 7);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(src.width()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(src.height()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(src.size()));
  put_le<double>(os, src.fs());
  const std::size_t plane = static_cast<std::size_t>(src.width()) * src.height();
  std::vector<char> buf(plane * 3);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Image8 f = src.frame(i);
    for (std::size_t p = 0; p < plane; ++p)
      for (int c = 0; c < 3; ++c) buf[c * plane + p] = static_cast<char>(f.data[p * 3 + c]);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!os) fail(Errc::format, "write failed for " + file.string());
}

facegeom::LandmarkSequence load_landmarks(const fs::path& path, std::size_t n_frames) {
  std::ifstream in(path);
  if (!in) fail(Errc::format, "cannot open landmark file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::size_t points = 0;
  std::map<long, facegeom::LandmarkFrame> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (points == 0) {
      if (cells.empty() || cells[0] != "frame") line_error(path, line_no, "expected header starting with 'frame'");
      const std::size_t coords = cells.size() - 1;
      if (coords != 2 * facegeom::kBaseLandmarks && coords != 2 * facegeom::kExtendedLandmarks)
        line_error(path, line_no, "header must list 68 or 85 x/y pairs");
      points = coords / 2;
      continue;
    }
    if (cells.size() != 2 * points + 1)
      line_error(path, line_no, "expected " + std::to_string(2 * points + 1) + " columns, got " +
                                    std::to_string(cells.size()));
    double idx = 0.0;
    if (!parse_double(cells[0], idx) || idx < 0 || idx != std::floor(idx)) line_error(path, line_no, "bad frame index");
    if (std::all_of(cells.begin() + 1, cells.end(), [](const std::string& c) { return c.empty(); })) continue;
    facegeom::LandmarkFrame lm;
    lm.frame_index = static_cast<std::int64_t>(idx);
    lm.points.resize(points);
    for (std::size_t k = 0; k < points; ++k) {
      if (!parse_double(cells[1 + 2 * k], lm.points[k].x) || !parse_double(cells[2 + 2 * k], lm.points[k].y))
        line_error(path, line_no, "bad coordinate for point " + std::to_string(k));
    }
    if (!rows.emplace(static_cast<long>(idx), std::move(lm)).second) line_error(path, line_no, "duplicate frame");
  }
  if (points == 0) fail(Errc::format, "landmark file " + path.string() + " is empty");
  std::size_t n = n_frames;
  if (n == 0 && !rows.empty()) n = static_cast<std::size_t>(rows.rbegin()->first) + 1;
  facegeom::LandmarkSequence seq(n);
  for (auto& [i, lm] : rows)
    if (static_cast<std::size_t>(i) < n) seq[static_cast<std::size_t>(i)] = std::move(lm);
  return seq;
}

void write_landmarks(const fs::path& path, const facegeom::LandmarkSequence& lms) {
  std::size_t points = facegeom::kBaseLandmarks;
  for (const auto& lm : lms)
    if (lm) {
      points = lm->points.size();
      break;
    }
  std::ofstream os(path);
  if (!os) fail(Errc::format, "cannot write " + path.string());
  os.precision(10);
  os << "frame";
  for (std::size_t k = 0; k < points; ++k) os << ",x" << k << ",y" << k;
  os << '\n';
  for (std::size_t i = 0; i < lms.size(); ++i) {
    if (!lms[i]) continue;
    if (lms[i]->points.size() != points) fail(Errc::invalid_input, "landmark frames differ in point count");
    os << i;
    for (const auto& p : lms[i]->points) os << ',' << p.x << ',' << p.y;
    os << '\n';
  }
}

dsp::Signal1D load_reference(const fs::path& path, double fs, int channel) {
  if (!(fs > 0.0)) fail(Errc::invalid_input, "reference fs must be positive");
  std::ifstream in(path);
  if (!in) fail(Errc::format, "cannot open reference file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> t, v;
  bool timed = false;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto cells = split_csv(line);
    double a = 0.0;
    if (first) {
      first = false;
      if (!parse_double(cells[0], a)) {
        // Header row; a leading time column is named t or time.
        timed = cells.size() >= 2 && (cells[0] == "t" || cells[0] == "time" || cells[0] == "time_s");
        continue;
      }
      timed = cells.size() >= 2 && channel >= 0 && static_cast<int>(cells.size()) >= channel + 2;
    }
    const std::size_t col = timed ? static_cast<std::size_t>(channel) + 1 : static_cast<std::size_t>(channel);
    if (col >= cells.size()) line_error(path, line_no, "missing value column " + std::to_string(col));
    double value = 0.0;
    if (!parse_double(cells[col], value)) line_error(path, line_no, "bad value '" + cells[col] + "'");
    if (timed) {
      if (!parse_double(cells[0], a)) line_error(path, line_no, "bad timestamp");
      if (!t.empty() && a == t.back()) line_error(path, line_no, "duplicate timestamp");
      if (!t.empty() && a < t.back()) line_error(path, line_no, "timestamps not increasing");
      t.push_back(a);
    }
    v.push_back(value);
  }
  if (v.empty()) fail(Errc::format, "reference file " + path.string() + " holds no samples");
  if (!timed) return {std::move(v), fs};

  dsp::Signal1D out;
  out.fs = fs;
  const double t0 = t.front();
  const double span_s = t.back() - t0;
  const auto n = static_cast<std::size_t>(std::floor(span_s * fs + 1e-9)) + 1;
  out.samples.resize(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = t0 + static_cast<double>(i) / fs;
    while (j + 2 < t.size() && t[j + 1] < ti) ++j;
    if (t.size() == 1) {
      out.samples[i] = v[0];
      continue;
    }
    const double w = std::clamp((ti - t[j]) / (t[j + 1] - t[j]), 0.0, 1.0);
    out.samples[i] = v[j] * (1.0 - w) + v[j + 1] * w;
  }
  return out;
}

void write_reference(const fs::path& path, const dsp::Signal1D& s, bool with_time) {
  std::ofstream os(path);
  if (!os) fail(Errc::format, "cannot write " + path.string());
  os.precision(12);
  os << (with_time ? "t,value\n" : "value\n");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (with_time) os << static_cast<double>(i) / s.fs << ',';
    os << s.samples[i] << '\n';
  }
}

DatasetDescriptor load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config, "cannot open dataset descriptor " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(Errc::config, "dataset descriptor " + path.string() + ": " + e.what());
  }
  DatasetDescriptor d;
  try {
    d.name = j.value("name", path.stem().string());
    const fs::path base = path.parent_path();
    d.root = resolve(base.empty() ? fs::path(".") : base, j.value("root", std::string(".")));
    if (j.contains("alignment_lag_s") && !j["alignment_lag_s"].is_null())
      d.alignment_lag_s = j["alignment_lag_s"].get<double>();
    for (const auto& v : j.at("videos")) {
      VideoEntry e;
      e.id = v.at("id").get<std::string>();
      e.frames = resolve(d.root, v.at("frames").get<std::string>());
      e.landmarks = resolve(d.root, v.at("landmarks").get<std::string>());
      e.reference = resolve(d.root, v.at("reference").get<std::string>());
      const std::string kind = v.value("reference_kind", std::string("bvp"));
      if (kind == "bvp")
        e.reference_kind = spectral::ReferenceKind::bvp;
      else if (kind == "ecg")
        e.reference_kind = spectral::ReferenceKind::ecg;
      else
        fail(Errc::config, "video " + e.id + ": reference_kind must be bvp or ecg");
      e.reference_fs = v.at("reference_fs").get<double>();
      if (!(e.reference_fs > 0.0)) fail(Errc::config, "video " + e.id + ": reference_fs must be positive");
      e.scenario = v.value("scenario", std::string());
      if (v.contains("ecg_channel") && !v["ecg_channel"].is_null()) e.ecg_channel = v["ecg_channel"].get<int>();
      for (const fs::path* p : {&e.frames, &e.landmarks, &e.reference})
        if (!fs::exists(*p)) d.missing.push_back(e.id + ": " + p->string());
      d.videos.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, "dataset descriptor " + path.string() + ": " + e.what());
  }
  return d;
}

void save_dataset(const fs::path& path, const DatasetDescriptor& d) {
  nlohmann::json j;
  j["name"] = d.name;
  const fs::path here = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  const fs::path root_rel = fs::absolute(d.root).lexically_relative(fs::absolute(here));
  j["root"] = root_rel.empty() ? d.root.string() : root_rel.string();
  j["alignment_lag_s"] = d.alignment_lag_s ? nlohmann::json(*d.alignment_lag_s) : nlohmann::json();
  j["videos"] = nlohmann::json::array();
  const auto rel = [&](const fs::path& p) {
    const fs::path r = fs::absolute(p).lexically_relative(fs::absolute(d.root));
    return r.empty() ? p.string() : r.string();
  };
  for (const auto& e : d.videos) {
    nlohmann::json v;
    v["id"] = e.id;
    v["frames"] = rel(e.frames);
    v["landmarks"] = rel(e.landmarks);
    v["reference"] = rel(e.reference);
    v["reference_kind"] = e.reference_kind == spectral::ReferenceKind::bvp ? "bvp" : "ecg";
    v["reference_fs"] = e.reference_fs;
    v["scenario"] = e.scenario;
    v["ecg_channel"] = e.ecg_channel ? nlohmann::json(*e.ecg_channel) : nlohmann::json();
    j["videos"].push_back(std::move(v));
  }
  std::ofstream os(path);
  if (!os) fail(Errc::config, "cannot write " + path.string());
  os << j.dump(2) << '\n';
}

}  // namespace fp::io
