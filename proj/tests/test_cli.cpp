#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "flipchain/cli.hpp"

using namespace flipchain;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("flipchain_test_" + name);
  fs::remove_all(dir);
  return dir;
}

cli::RunConfig small_config(const fs::path& out) {
  cli::RunConfig c;
  c.n = 60;
  c.seed = 42;
  c.budget = 30000;
  c.burn_in = 6000;
  c.rejection_window = 5000;
  c.output = out.string();
  return c;
}

}  // namespace

TEST(ParseCount, Forms) {
  EXPECT_EQ(cli::parse_count("100000"), 100000u);
  EXPECT_EQ(cli::parse_count("1e8"), 100000000u);
  EXPECT_EQ(cli::parse_count("2.5e6"), 2500000u);
  EXPECT_FALSE(cli::parse_count("-3"));
  EXPECT_FALSE(cli::parse_count("1.5"));
  EXPECT_FALSE(cli::parse_count("ten"));
  EXPECT_FALSE(cli::parse_count(""));
}

TEST(RunConfig, Defaults) {
  cli::RunConfig c;
  c.n = 8194;
  EXPECT_EQ(c.effective_burn_in(), 8194000u);
  EXPECT_EQ(c.effective_sample_every(), 8194u);
  EXPECT_EQ(c.effective_fit_window().hi, 25u);
  const auto text = c.describe();
  EXPECT_NE(text.find("rule=node-then-link\n"), std::string::npos);
  EXPECT_NE(text.find("fit-hi=25\n"), std::string::npos);
  c.chains = 0;
  EXPECT_THROW(cli::check_config(c), usage_error);
}

TEST(Simulate, ByteIdenticalReruns) {
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  std::ostringstream log;
  cli::simulate(small_config(a), log);
  cli::simulate(small_config(b), log);
  for (const char* f : {"config.txt", "histogram.csv", "timeseries.csv", "fits.csv", "summary.txt", "final.tri"}) {
    const auto x = slurp(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
  auto other = small_config(scratch_dir("det_c"));
  other.seed = 43;
  cli::simulate(other, log);
  EXPECT_NE(slurp(a / "final.tri"), slurp(fs::path(other.output) / "final.tri"));
  EXPECT_TRUE(validate(deserialize(slurp(a / "final.tri"))).empty());
}

TEST(Simulate, ReportContents) {
  auto c = small_config(scratch_dir("report"));
  std::ostringstream log;
  const auto report = cli::simulate(c, log);
  ASSERT_EQ(report.chains.size(), 1u);
  const auto& r = report.chains[0];
  EXPECT_EQ(r.attempts, 36000u);
  EXPECT_EQ(r.accepted + r.rejected, r.attempts);
  EXPECT_EQ(r.degrees.samples(), 30000u / 60);
  std::uint64_t window_attempts = 0;
  for (const auto& w : r.rejection) window_attempts += w.attempts;
  EXPECT_EQ(window_attempts, 30000u);
  EXPECT_EQ(r.series.back().attempts, 36000u);
  EXPECT_EQ(r.initial_curvature, forman_curvature_sum(make_christmas_tree(60)));
}

TEST(Simulate, ParallelChainsMergeAndRepeat) {
  auto c = small_config(scratch_dir("multi"));
  c.chains = 3;
  std::ostringstream log;
  const auto report = cli::simulate(c, log);
  ASSERT_EQ(report.chains.size(), 3u);
  EXPECT_EQ(report.merged.samples(), 3 * report.chains[0].degrees.samples());
  EXPECT_NE(report.chains[0].seed, report.chains[1].seed);
  for (int k = 0; k < 3; ++k) EXPECT_TRUE(fs::exists(fs::path(c.output) / ("chain_" + std::to_string(k)) / "final.tri"));
  EXPECT_TRUE(fs::exists(fs::path(c.output) / "histogram.csv"));
  const auto first = slurp(fs::path(c.output) / "histogram.csv");
  c.output = scratch_dir("multi_again").string();
  cli::simulate(c, log);
  EXPECT_EQ(first, slurp(fs::path(c.output) / "histogram.csv"));
}

TEST(Simulate, InitialFromFile) {
  const auto dir = scratch_dir("initial");
  fs::create_directories(dir);
  auto start = make_christmas_tree(20);
  ChainState warm(start, SelectionRule::uniform_link, 1);
  warm.advance(500);
  {
    std::ofstream out(dir / "start.tri");
    out << serialize(warm.triangulation());
  }
  auto c = small_config(dir / "out");
  c.n = 20;
  c.initial = (dir / "start.tri").string();
  EXPECT_TRUE(cli::initial_state(c).same_links(warm.triangulation()));
  c.n = 21;
  EXPECT_THROW(cli::initial_state(c), usage_error);
  c.initial = (dir / "missing.tri").string();
  EXPECT_THROW(cli::initial_state(c), std::runtime_error);
}

TEST(Verify, SmallRangePasses) {
  std::ostringstream os;
  EXPECT_EQ(cli::verify(5, 6, os), 0) << os.str();
  EXPECT_NE(os.str().find("all checks passed"), std::string::npos);
  EXPECT_THROW(cli::verify(3, 6, os), usage_error);
}

TEST(Verify, ItemsAtSeven) {
  const auto items = cli::verify_items(7);
  std::vector<std::string> names;
  for (const auto& i : items) names.push_back(i.name);
  for (const char* want : {"euler-validate", "two-cycle", "three-cycle", "four-cycle node-then-link not reversible",
                           "four-cycle uniform-link ratio", "normalization", "uniform-link matrix symmetric"}) {
    const auto it = std::find(names.begin(), names.end(), want);
    ASSERT_NE(it, names.end()) << want;
    EXPECT_TRUE(items[it - names.begin()].passed) << want << ": " << items[it - names.begin()].detail;
  }
}

TEST(Enumerate, WritesArtifacts) {
  const auto dir = scratch_dir("enumerate");
  std::ostringstream os;
  EXPECT_EQ(cli::enumerate(5, dir.string(), 8, os), 0);
  for (const char* f : {"states.txt", "classes.txt", "matrix_uniform-link.txt", "matrix_node-then-link.txt",
                        "stationary_uniform-link.txt", "stationary_node-then-link.txt",
                        "reversibility_uniform-link.txt", "reversibility_node-then-link.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(slurp(dir / "classes.txt"), "labeled_states=10\nisomorphism_classes=1\n");
  EXPECT_THROW(cli::enumerate(8, dir.string(), 7, os), std::length_error);
}

TEST(Tutte, Table) {
  std::ostringstream os;
  const std::vector<std::uint32_t> ns{3, 10};
  cli::tutte_table(ns, os);
  const auto text = os.str();
  EXPECT_TRUE(text.starts_with("n,log_z,z,ratio_next\n3,"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
