#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "railcrowd/cli.hpp"
#include "railcrowd/estimator.hpp"
#include "test_support.hpp"

using namespace railcrowd;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("railcrowd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    topo_ = testsupport::data_path("six_station.json");
    const auto t = testsupport::six_station();
    const WalkVariableIndex index(t);
    const auto model = ActionTimeModel::from_moments(index, std::vector<double>(index.size(), 50.0),
                                                     std::vector<double>(index.size(), 20.0));
    spit(p("model.json"), model.to_json());
    spit(p("demand.json"), R"({"all_pairs": [{"start": "07:00", "end": "21:00", "rate": 2}]})");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  // One simulated history day and one event day (index 6).
  void simulate() {
    ASSERT_EQ(run({"simulate", "--topology", topo_, "--truth", p("model.json"), "--demand", p("demand.json"), "--out",
                   p("hist"), "--seed", "3"})
                  .code,
              0);
    ASSERT_EQ(run({"simulate", "--topology", topo_, "--truth", p("model.json"), "--demand", p("demand.json"), "--out",
                   p("day7"), "--first-day", "6", "--seed", "4"})
                  .code,
              0);
  }

  CliResult build(const std::string& archive, const std::string& seed = "1") {
    return run({"build-tables", "--topology", topo_, "--history", p("hist/afc.csv"), "--model", p("model.json"),
                "--archive", p(archive), "--imax", "500", "--seed", seed});
  }

  fs::path dir_;
  std::string topo_;
};

}  // namespace

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"infer", "--bogus"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"build-tables", "--history", p("x.csv"), "--archive", p("a.bin")}).code, 1);
  const auto missing = run({"build-tables", "--topology", p("nope.json"), "--history", p("x.csv"), "--archive", p("a")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("nope.json"), std::string::npos);
  EXPECT_EQ(run({"render", "--topology", topo_, "--snapshots", p("s.csv"), "--render", "png", "--out", p("r")}).code,
            1);
}

TEST_F(CliTest, DataErrors) {
  spit(p("bad.json"), "{ not json");
  spit(p("h.csv"), "trip_id,entry_station,entry_ts,exit_station,exit_ts\n");
  EXPECT_EQ(run({"estimate", "--topology", p("bad.json"), "--history", p("h.csv"), "--out", p("m.json")}).code, 2);
  simulate();
  const auto starved =
      run({"estimate", "--topology", topo_, "--history", p("hist/afc.csv"), "--nmin", "100000", "--out", p("m.json")});
  EXPECT_EQ(starved.code, 2);
  EXPECT_NE(starved.err.find("no usable pairs"), std::string::npos);
  // The six-station network cannot separate its walk variables.
  const auto deficient = run({"estimate", "--topology", topo_, "--history", p("hist/afc.csv"), "--out", p("m.json")});
  EXPECT_EQ(deficient.code, 2);
  EXPECT_NE(deficient.err.find("rank deficient"), std::string::npos);
}

TEST_F(CliTest, SimulateWritesOneHeaderAndIsDeterministic) {
  ASSERT_EQ(run({"simulate", "--topology", topo_, "--truth", p("model.json"), "--demand", p("demand.json"), "--out",
                 p("a"), "--days", "2"})
                .code,
            0);
  ASSERT_EQ(run({"simulate", "--topology", topo_, "--truth", p("model.json"), "--demand", p("demand.json"), "--out",
                 p("b"), "--days", "2"})
                .code,
            0);
  const auto afc = slurp(p("a/afc.csv"));
  EXPECT_EQ(count_of(afc, "trip_id"), 1u);
  EXPECT_EQ(count_of(slurp(p("a/trace.csv")), "trip_id"), 1u);
  EXPECT_NE(afc.find("\nd1-"), std::string::npos);
  EXPECT_EQ(afc, slurp(p("b/afc.csv")));
  EXPECT_EQ(slurp(p("a/trace.csv")), slurp(p("b/trace.csv")));
}

TEST_F(CliTest, BuildTablesOnTwoStations) {
  spit(p("two.json"), testsupport::kTwoStations);
  const auto t = NetworkTopology::from_json(testsupport::kTwoStations);
  const WalkVariableIndex index(t);
  spit(p("two_model.json"), ActionTimeModel::from_moments(index, std::vector<double>{40.0, 45.0}, std::vector<double>{5.0, 5.0}).to_json());
  spit(p("h.csv"), "trip_id,entry_station,entry_ts,exit_station,exit_ts\nt1,X,30000,Y,30300\nt2,Y,30000,X,30250\n");
  const auto r = run({"build-tables", "--topology", p("two.json"), "--history", p("h.csv"), "--archive", p("two.bin"),
                      "--imax", "200", "--model", p("two_model.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2 location tables, 2 destination records"), std::string::npos) << r.out;
}

TEST_F(CliTest, SameSeedGivesBitIdenticalArchive) {
  simulate();
  ASSERT_EQ(build("a.bin").code, 0);
  ASSERT_EQ(build("b.bin").code, 0);
  ASSERT_EQ(build("c.bin", "2").code, 0);
  EXPECT_EQ(slurp(p("a.bin")), slurp(p("b.bin")));
  EXPECT_NE(slurp(p("a.bin")), slurp(p("c.bin")));
}

TEST_F(CliTest, InferEmitsOneSnapshotPerTick) {
  simulate();
  ASSERT_EQ(build("a.bin").code, 0);
  const std::vector<std::string> args = {"infer", "--topology", topo_, "--archive", p("a.bin"), "--events",
                                         p("day7/afc.csv"), "--from", "08:00", "--to", "20:00", "--cadence", "600"};
  const auto first = run(args);
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_EQ(count_of(first.out, "TOTAL,system"), 73u);
  EXPECT_EQ(first.out.rfind("time,component_id,kind,expected_count\n", 0), 0u);
  // 08:00 of day index 6
  EXPECT_EQ(first.out.find("\n547200,A,station,"), first.out.find('\n'));
  EXPECT_NE(first.out.find("\n590400,TOTAL,system,"), std::string::npos);
  EXPECT_EQ(run(args).out, first.out);

  auto with_file = args;
  with_file.insert(with_file.end(), {"--out", p("snaps.csv")});
  ASSERT_EQ(run(with_file).code, 0);
  EXPECT_EQ(slurp(p("snaps.csv")), first.out);
}

TEST_F(CliTest, EmptyEventsGiveZeroSnapshots) {
  simulate();
  ASSERT_EQ(build("a.bin").code, 0);
  spit(p("none.csv"), "trip_id,entry_station,entry_ts,exit_station,exit_ts\n");
  const auto r = run({"infer", "--topology", topo_, "--archive", p("a.bin"), "--events", p("none.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_of(r.out, "TOTAL,system,0\n"), 73u);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) EXPECT_EQ(line.substr(line.rfind(',')), ",0") << line;
}

TEST_F(CliTest, InferWithRenderWritesMapsAndSeries) {
  simulate();
  ASSERT_EQ(build("a.bin").code, 0);
  const auto r = run({"infer", "--topology", topo_, "--archive", p("a.bin"), "--events", p("day7/afc.csv"), "--from",
                      "08:00", "--to", "09:00", "--render", "both", "--fold-transfers", "--out", p("view")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(p("view/snapshots.csv")));
  EXPECT_TRUE(fs::exists(p("view/snapshot_0000_0800.svg")));
  EXPECT_TRUE(fs::exists(p("view/snapshot_0006_0900.svg")));
  const auto series = slurp(p("view/timeseries.csv"));
  EXPECT_EQ(series.rfind("time,A,B,C,D,E,F,A-B,", 0), 0u);
  EXPECT_EQ(series.find("E/Trans"), std::string::npos);

  const auto again = run({"render", "--topology", topo_, "--snapshots", p("view/snapshots.csv"), "--render", "csv",
                          "--out", p("again")});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(slurp(p("again/timeseries.csv")), series);
}

TEST_F(CliTest, RenderWithoutLayout) {
  spit(p("three.json"), testsupport::kThreeStations);
  spit(p("s.csv"),
       "time,component_id,kind,expected_count\n100,A,station,1\n100,B,station,0\n100,C,station,0\n"
       "100,A-B,segment,0\n100,B-C,segment,0\n100,TOTAL,system,1\n");
  const auto svg_only =
      run({"render", "--topology", p("three.json"), "--snapshots", p("s.csv"), "--render", "svg", "--out", p("o1")});
  EXPECT_EQ(svg_only.code, 2);
  const auto both =
      run({"render", "--topology", p("three.json"), "--snapshots", p("s.csv"), "--render", "both", "--out", p("o2")});
  EXPECT_EQ(both.code, 0);
  EXPECT_NE(both.err.find("csv only"), std::string::npos);
  EXPECT_TRUE(fs::exists(p("o2/timeseries.csv")));
}

TEST_F(CliTest, ArchiveForAnotherNetworkIsRejected) {
  simulate();
  ASSERT_EQ(build("a.bin").code, 0);
  spit(p("none.csv"), "trip_id,entry_station,entry_ts,exit_station,exit_ts\n");
  const auto r = run({"infer", "--topology", testsupport::data_path("two_line_31.json"), "--archive", p("a.bin"),
                      "--events", p("none.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("fingerprint"), std::string::npos);
}

TEST(ClockArgument, Formats) {
  EXPECT_EQ(parse_clock_arg("08:00"), 28800);
  EXPECT_EQ(parse_clock_arg("20:00:30"), 72030);
  EXPECT_EQ(parse_clock_arg("547200"), 547200);
  EXPECT_THROW(parse_clock_arg("8h"), std::exception);
  EXPECT_THROW(parse_clock_arg("08:75"), std::exception);
}
