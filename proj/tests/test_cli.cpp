#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "foldmap/commands.hpp"
#include "foldmap/error.hpp"

namespace foldmap {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "foldmap");
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("foldmap_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(Cli, MapReportsFoldCounts) {
  const CliRun r = run({"map", "--suite", "synthetic", "--array", "64x64", "--format", "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("3x3x64x64,64x64,12,5,64x60,1,13,13,"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("3x3x512x512,64x64,12,5,64x60,8,103,824,"), std::string::npos) << r.out;
}

TEST(Cli, MapScheduleForInlineLayer) {
  const CliRun r = run({"map", "--layer", "ex,1,4,5,5,4,3,3,1,1", "--array", "4x24", "--schedule"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("FF instances: 2"), std::string::npos);
  EXPECT_NE(r.out.find("\"total_folds\":2"), std::string::npos);
}

TEST(Cli, UnmappableLayerExitsWithConfigCode) {
  const CliRun r = run({"map", "--layer", "1,1,1,1,1,1,1,1,0", "--array", "4x1"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("unmappable"), std::string::npos) << r.err;
}

TEST(Cli, BadArgumentsExitWithConfigCode) {
  EXPECT_EQ(run({"map", "--array", "64by64"}).code, kExitConfig);
  EXPECT_EQ(run({"map", "--suite", "nope"}).code, kExitConfig);
  EXPECT_EQ(run({"map", "--suite", "vgg16", "--layer", "1,1,1,1,1,1,1,1,0"}).code, kExitConfig);
  EXPECT_EQ(run({"model", "--set", "clock_ghz=-1"}).code, kExitConfig);
  EXPECT_EQ(run({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(run({"map", "--layer-file", "/nonexistent/layers.txt"}).code, kExitConfig);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, kExitOk); }

TEST(Cli, SimulateSmallSuiteMatches) {
  const fs::path dir = scratch("simulate");
  const CliRun r = run({"simulate", "--suite", "small", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.find("\"match\":false"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "simulate.jsonl"));
  fs::remove_all(dir);
}

TEST(Cli, SimulateRefusesLargeLayersWithoutFull) {
  const CliRun r = run({"simulate", "--suite", "vgg16"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("--full"), std::string::npos) << r.err;
}

TEST(Cli, SimulateFloatMode) {
  const CliRun r = run({"simulate", "--suite", "example", "--array", "4x24", "--mode", "fp32", "--seed", "9"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("\"mode\":\"fp32\""), std::string::npos) << r.out;
}

TEST(Cli, ModelReportsKips) {
  const CliRun r =
      run({"model", "--suite", "vgg16", "--set", "tiles=16", "--supply-comm", "7.6e6,0.64e6,260.7e6"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto at = r.out.find("\"kips\": ");
  ASSERT_NE(at, std::string::npos) << r.out;
  EXPECT_NEAR(std::stod(r.out.substr(at + 8)), 12.7, 0.4);
  EXPECT_NE(r.out.find("\"provenance\": \"supplied\""), std::string::npos);
}

TEST(Cli, ModelWritesFiles) {
  const fs::path dir = scratch("model");
  const CliRun r = run({"model", "--suite", "synthetic", "--array", "32x32", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "model_32x32.csv"));
  EXPECT_TRUE(fs::exists(dir / "model_32x32.json"));
  fs::remove_all(dir);
}

TEST(Cli, ConfigFileFeedsModel) {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  std::ofstream(dir / "sys.cfg") << "array=16x16\nclock_ghz=2\n";
  const CliRun r = run({"model", "--suite", "synthetic", "--config", (dir / "sys.cfg").string(), "--format", "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("3x3x512x512,75.00,205553728,"), std::string::npos) << r.out;
  std::ofstream(dir / "bad.cfg") << "array=16x16\nwhat=2\n";
  const CliRun bad = run({"model", "--config", (dir / "bad.cfg").string()});
  EXPECT_EQ(bad.code, kExitConfig);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;
  fs::remove_all(dir);
}

TEST(Cli, BenchIsByteIdenticalAcrossRuns) {
  const fs::path a = scratch("bench_a");
  const fs::path b = scratch("bench_b");
  ASSERT_EQ(run({"bench", "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(run({"bench", "--out", b.string()}).code, kExitOk);
  for (const std::string& name : bench_file_names()) {
    ASSERT_TRUE(fs::exists(a / name)) << name;
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

}  // namespace
}  // namespace foldmap
