#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "facepulse/error.hpp"
#include "facepulse/evaluate.hpp"
#include "synth_dataset.hpp"
#include "tempdir.hpp"

using namespace fp;
using testing_support::TempDir;

namespace {

synth::SyntheticSpec short_spec() {
  synth::SyntheticSpec s;
  s.duration_s = 14.0;
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Evaluate, TenVideosThreeMethods) {
  TempDir tmp("eval10");
  const std::vector<double> bpms{60, 66, 72, 78, 84, 90, 96, 102, 108, 114};
  const auto d = testing_support::write_synthetic_dataset(tmp.path(), bpms, short_spec());
  evaluate::EvaluateOptions opt;
  opt.methods = {rppg::Method::chrom, rppg::Method::pos, rppg::Method::omit};
  opt.jobs = 2;
  const auto res = evaluate::run_evaluate(d, {}, opt);
  EXPECT_EQ(res.reports.size(), 30u);
  EXPECT_EQ(res.series.size(), 30u);
  ASSERT_EQ(res.aggregate.size(), 3u);
  for (const auto& a : res.aggregate) {
    EXPECT_EQ(a.videos, 10u);
    EXPECT_LT(a.mae, 1.5) << a.method;
  }
  EXPECT_TRUE(res.exclusions.empty());
  EXPECT_EQ(res.exit_code(), 0);
  // Synthetic pulse and reference share one timeline.
  for (const auto& l : res.lags) EXPECT_EQ(l.lag_s, 0.0) << l.video_id << " " << l.method;
}

TEST(Evaluate, JobsDoNotChangeResults) {
  TempDir tmp("evaljobs");
  const auto d = testing_support::write_synthetic_dataset(tmp.path(), {70, 95, 120}, short_spec());
  evaluate::EvaluateOptions a, b;
  a.methods = b.methods = {rppg::Method::pos};
  b.jobs = 3;
  const auto ra = evaluate::run_evaluate(d, {}, a), rb = evaluate::run_evaluate(d, {}, b);
  ASSERT_EQ(ra.reports.size(), rb.reports.size());
  for (std::size_t i = 0; i < ra.reports.size(); ++i) {
    EXPECT_EQ(ra.reports[i].video_id, rb.reports[i].video_id);
    EXPECT_EQ(ra.reports[i].mae, rb.reports[i].mae);
  }
}

TEST(Evaluate, MissingReferenceIsExcluded) {
  TempDir tmp("evalmiss");
  auto d = testing_support::write_synthetic_dataset(tmp.path(), {70, 80, 90}, short_spec());
  std::filesystem::remove(d.videos[1].reference);
  std::vector<std::string> log;
  evaluate::EvaluateOptions opt;
  opt.log = [&](const std::string& m) { log.push_back(m); };
  const auto res = evaluate::run_evaluate(d, {}, opt);
  ASSERT_EQ(res.exclusions.size(), 1u);
  EXPECT_EQ(res.exclusions[0].video_id, "v2");
  EXPECT_NE(res.exclusions[0].reason.find("reference"), std::string::npos);
  EXPECT_EQ(res.reports.size(), 2u);
  EXPECT_EQ(res.exit_code(), 4);
  EXPECT_TRUE(std::any_of(log.begin(), log.end(), [](const std::string& m) { return m.rfind("excluded v2", 0) == 0; }));
}

TEST(Evaluate, NothingEvaluable) {
  TempDir tmp("evalnone");
  auto d = testing_support::write_synthetic_dataset(tmp.path(), {70}, short_spec());
  std::filesystem::remove(d.videos[0].landmarks);
  EXPECT_EQ(evaluate::run_evaluate(d, {}, {}).exit_code(), 3);
}

TEST(Evaluate, EcgWithoutChannelExcluded) {
  TempDir tmp("evalecg");
  auto d = testing_support::write_synthetic_dataset(tmp.path(), {70, 80}, short_spec());
  d.videos[0].reference_kind = spectral::ReferenceKind::ecg;
  const auto res = evaluate::run_evaluate(d, {}, {});
  ASSERT_EQ(res.exclusions.size(), 1u);
  EXPECT_NE(res.exclusions[0].reason.find("ecg_channel"), std::string::npos);
}

TEST(Evaluate, ConfigErrorsBeforeWork) {
  TempDir tmp("evalcfg");
  const auto d = testing_support::write_synthetic_dataset(tmp.path(), {70}, short_spec());
  config::PipelineConfig cfg;
  cfg.pipeline = config::Pipeline::improved;
  evaluate::EvaluateOptions opt;
  opt.methods = {rppg::Method::ssr};
  try {
    evaluate::run_evaluate(d, cfg, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
  }
  evaluate::EvaluateOptions sweep;
  sweep.grid_sweep = true;
  try {
    evaluate::run_evaluate(d, cfg, sweep);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
  }
}

TEST(Evaluate, GridSweepGroups) {
  TempDir tmp("evalsweep");
  const auto d = testing_support::write_synthetic_dataset(tmp.path(), {75, 100}, short_spec());
  evaluate::EvaluateOptions opt;
  opt.grid_sweep = true;
  const auto res = evaluate::run_evaluate(d, {}, opt);
  EXPECT_EQ(res.reports.size(), 12u);
  ASSERT_EQ(res.aggregate.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(res.aggregate[i].grid_n, 6 + i);
}

TEST(Evaluate, FixedDatasetLag) {
  TempDir tmp("evallag");
  auto d = testing_support::write_synthetic_dataset(tmp.path(), {75, 100}, short_spec());
  d.alignment_lag_s = 1.0;
  const auto res = evaluate::run_evaluate(d, {}, {});
  for (const auto& l : res.lags) {
    EXPECT_EQ(l.lag_s, 1.0);
    EXPECT_FALSE(l.estimated);
  }
}

TEST(Evaluate, ScenarioTags) {
  TempDir tmp("evalscen");
  const auto d = testing_support::write_synthetic_dataset(tmp.path(), {70, 80, 90}, short_spec(), 1,
                                                          {"still", "still", "talking"});
  const auto res = evaluate::run_evaluate(d, {}, {});
  ASSERT_EQ(res.by_scenario.size(), 2u);
  EXPECT_EQ(res.by_scenario[0].scenario, "still");
  EXPECT_EQ(res.by_scenario[0].videos, 2u);
}

TEST(Evaluate, WritesRunDirectory) {
  TempDir tmp("evalrun");
  const auto d = testing_support::write_synthetic_dataset(tmp.path() / "data", {70, 90}, short_spec());
  evaluate::EvaluateOptions opt;
  opt.methods = {rppg::Method::chrom, rppg::Method::omit};
  opt.out = tmp / "run";
  const auto res = evaluate::run_evaluate(d, {}, opt);
  for (const char* f : {"reports.csv", "aggregate.csv", "config.json", "summary.md", "summary.json"})
    EXPECT_TRUE(std::filesystem::exists(tmp / "run" / f)) << f;
  EXPECT_TRUE(std::filesystem::exists(tmp / "run" / "series" / "v1__chrom__9x9.csv"));
  const auto j = nlohmann::json::parse(slurp(tmp / "run" / "summary.json"));
  EXPECT_EQ(j["reports"], 4);
  EXPECT_EQ(j["exit_code"], 0);
  EXPECT_EQ(j["aggregate"].size(), 2u);
  const auto reports = slurp(tmp / "run" / "reports.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(reports.begin(), reports.end(), '\n')), res.reports.size() + 1);
  EXPECT_NE(slurp(tmp / "run" / "summary.md").find("±"), std::string::npos);
}
