#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "facepulse/error.hpp"
#include "facepulse/evaluate.hpp"
#include "facepulse/plots.hpp"
#include "synth_dataset.hpp"
#include "tempdir.hpp"

using namespace fp;
using testing_support::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Plots, OverlaysAndBoxPlot) {
  TempDir tmp("plots");
  synth::SyntheticSpec spec;
  spec.duration_s = 14.0;
  const auto d = testing_support::write_synthetic_dataset(tmp.path() / "data", {70, 90, 110}, spec);
  evaluate::EvaluateOptions opt;
  opt.methods = {rppg::Method::chrom, rppg::Method::pos};
  opt.out = tmp / "run";
  evaluate::run_evaluate(d, {}, opt);

  const auto files = plots::run_plots(tmp / "run");
  ASSERT_EQ(files.size(), 4u);
  int overlays = 0, boxes = 0;
  for (const auto& f : files) {
    EXPECT_TRUE(std::filesystem::exists(f));
    const auto name = f.filename().string();
    overlays += name.rfind("hr_", 0) == 0;
    boxes += name == "mae_box.svg";
    EXPECT_EQ(slurp(f).rfind("<svg", 0) == 0 || slurp(f).rfind("<?xml", 0) == 0, true) << name;
  }
  EXPECT_EQ(overlays, 3);
  EXPECT_EQ(boxes, 1);

  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(f));
  plots::run_plots(tmp / "run");
  for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(slurp(files[i]), first[i]) << files[i];

  const auto logged = plots::run_plots(tmp / "run", {true});
  EXPECT_EQ(logged.size(), 4u);
}

TEST(Plots, EmptyRunRejected) {
  TempDir tmp("plotsempty");
  try {
    plots::run_plots(tmp.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::data);
  }
}

TEST(Plots, BoxStats) {
  const auto b = plots::box_stats({1, 2, 3, 4, 5});
  EXPECT_DOUBLE_EQ(b.q1, 2.0);
  EXPECT_DOUBLE_EQ(b.median, 3.0);
  EXPECT_DOUBLE_EQ(b.q3, 4.0);
  EXPECT_DOUBLE_EQ(b.lo_whisker, 1.0);
  EXPECT_DOUBLE_EQ(b.hi_whisker, 5.0);
  EXPECT_TRUE(b.outliers.empty());

  const auto o = plots::box_stats({1, 2, 3, 4, 100});
  ASSERT_EQ(o.outliers.size(), 1u);
  EXPECT_EQ(o.outliers[0], 100.0);
  EXPECT_DOUBLE_EQ(o.hi_whisker, 4.0);

  const auto even = plots::box_stats({4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(even.median, 2.5);
  EXPECT_DOUBLE_EQ(even.q1, 1.75);
  EXPECT_THROW(plots::box_stats({}), Error);
}
