#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "railcrowd/simgen.hpp"
#include "test_support.hpp"

using namespace railcrowd;

namespace {

StationId sid(const NetworkTopology& t, const std::string& code) { return *t.find_station(code); }

ActionTimeModel flat_model(const NetworkTopology& t, double mean, double var) {
  const WalkVariableIndex index(t);
  return ActionTimeModel::from_moments(index, std::vector<double>(index.size(), mean),
                                       std::vector<double>(index.size(), var));
}

}  // namespace

TEST(DemandProfile, ParsesAllPairsAndExtraPairs) {
  const auto t = testsupport::six_station();
  const auto d = DemandProfile::from_json(R"({
    "all_pairs": [{"start": "07:00", "end": "09:00", "rate": 3}],
    "pairs": [{"from": "A", "to": "F", "buckets": [{"start": 0, "end": "00:30", "rate": 10}]}]
  })", t);
  ASSERT_EQ(d.pairs.size(), 31u);
  EXPECT_EQ(d.pairs[0].buckets[0].start, 25200);
  EXPECT_EQ(d.pairs[0].buckets[0].end, 32400);
  EXPECT_EQ(d.pairs.back().pair.from, sid(t, "A"));
  EXPECT_EQ(d.pairs.back().buckets[0].end, 1800);
  EXPECT_DOUBLE_EQ(d.expected_trips(), 30 * 6.0 + 5.0);
}

TEST(DemandProfile, RejectsBadInput) {
  const auto t = testsupport::six_station();
  EXPECT_THROW(DemandProfile::from_json("[", t), ParseError);
  EXPECT_THROW(DemandProfile::from_json(R"({"all_pairs": [{"start": "7h", "end": "09:00", "rate": 1}]})", t),
               ParseError);
  EXPECT_THROW(DemandProfile::from_json(R"({"all_pairs": [{"start": "09:00", "end": "07:00", "rate": 1}]})", t),
               ValidationError);
  EXPECT_THROW(DemandProfile::from_json(R"({"all_pairs": [{"start": 0, "end": 90000, "rate": 1}]})", t),
               ValidationError);
  EXPECT_THROW(DemandProfile::from_json(R"({"all_pairs": [{"start": 0, "end": 60, "rate": -1}]})", t),
               ValidationError);
  EXPECT_THROW(
      DemandProfile::from_json(R"({"pairs": [{"from": "A", "to": "A", "buckets": []}]})", t), ValidationError);
  EXPECT_THROW(
      DemandProfile::from_json(R"({"pairs": [{"from": "A", "to": "Q", "buckets": []}]})", t), ValidationError);
}

TEST(GenerateDay, SameSeedSameDay) {
  const auto t = testsupport::six_station();
  const RouteTable routes(t);
  const auto truth = flat_model(t, 50.0, 20.0);
  const RateBucket b[] = {{28800, 36000, 4.0}};
  const auto demand = DemandProfile::uniform(t, b);
  const auto a = generate_day(t, routes, truth, demand, 2, 11);
  const auto again = generate_day(t, routes, truth, demand, 2, 11);
  const auto other = generate_day(t, routes, truth, demand, 2, 12);
  ASSERT_EQ(a.records.size(), again.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].trip_id, again.records[i].trip_id);
    EXPECT_EQ(a.records[i].entry_time, again.records[i].entry_time);
    EXPECT_EQ(a.records[i].exit_time, again.records[i].exit_time);
    EXPECT_EQ(a.trace.trips[i].boundaries, again.trace.trips[i].boundaries);
  }
  std::ostringstream x, y;
  write_trace_csv(x, a.trace, t);
  write_trace_csv(y, other.trace, t);
  EXPECT_NE(x.str(), y.str());
}

TEST(GenerateDay, TripsFollowTheirRoutes) {
  const auto t = testsupport::two_line();
  const RouteTable routes(t);
  const auto truth = flat_model(t, 45.0, 30.0);
  const RateBucket b[] = {{25200, 27000, 1.0}};
  const int day = 3;
  const auto sim = generate_day(t, routes, truth, DemandProfile::uniform(t, b), day, 5);
  ASSERT_EQ(sim.records.size(), sim.trace.trips.size());
  ASSERT_GT(sim.records.size(), 300u);
  for (std::size_t i = 0; i < sim.records.size(); ++i) {
    const auto& rec = sim.records[i];
    const auto& tr = sim.trace.trips[i];
    const Route& route = routes.at(tr.from, tr.to);
    ASSERT_EQ(tr.boundaries.size(), route.size());
    EXPECT_EQ(rec.trip_id, tr.trip_id);
    EXPECT_EQ(rec.entry_station, tr.from);
    EXPECT_EQ(*rec.exit_station, tr.to);
    EXPECT_GE(rec.entry_time, day * 86400 + 25200);
    EXPECT_LT(rec.entry_time, day * 86400 + 27000);
    EXPECT_EQ(*rec.exit_time, rec.entry_time + static_cast<Timestamp>(tr.boundaries.back()));
    // whole-second exit stamp, taken from the exit walk
    EXPECT_EQ(tr.boundaries.back(), std::floor(tr.boundaries.back()));
    double prev = 0.0;
    for (std::size_t c = 0; c < route.size(); ++c) {
      EXPECT_GT(tr.boundaries[c], prev);
      if (route.actions[c].kind == ActionKind::move) {
        EXPECT_NEAR(tr.boundaries[c] - prev, t.segment(make_id<SegmentId>(route.actions[c].ref)).travel_time, 1e-9);
      }
      prev = tr.boundaries[c];
    }
    if (i > 0) EXPECT_LE(sim.records[i - 1].entry_time, rec.entry_time);
  }
}

TEST(GenerateDay, ArrivalCountIsPoisson) {
  const auto t = testsupport::two_line();
  const RouteTable routes(t);
  const auto truth = flat_model(t, 45.0, 30.0);
  const auto demand = DemandProfile::from_file(testsupport::data_path("two_line_31_demand.json"), t);
  const double expected = demand.expected_trips();
  EXPECT_NEAR(expected, 930 * (4 + 28 + 32 + 28 + 12 + 1.0), 1e-6);
  const auto sim = generate_day(t, routes, truth, demand, 0, 99);
  EXPECT_NEAR(static_cast<double>(sim.records.size()), expected, 5.0 * std::sqrt(expected));
  std::size_t peak = 0;
  for (const auto& r : sim.records) peak += (r.entry_time >= 25200 && r.entry_time < 32400) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(peak), 930 * 28.0, 5.0 * std::sqrt(930 * 28.0));
}

TEST(TrueCrowdedness, FollowsBoundaries) {
  const auto t = NetworkTopology::from_json(testsupport::kTwoStations);
  const RouteTable routes(t);
  GroundTruthTrace trace;
  trace.trips.push_back({"p", sid(t, "X"), sid(t, "Y"), 1000, {100.0, 190.0, 250.0}});
  auto at = [&](Timestamp now) { return true_crowdedness(trace, routes, t, now); };
  EXPECT_EQ(at(999).in_network, 0);
  EXPECT_EQ(at(1000).stations[idx(sid(t, "X"))], 1);
  EXPECT_EQ(at(1099).stations[idx(sid(t, "X"))], 1);
  EXPECT_EQ(at(1100).segments[0], 1);
  EXPECT_EQ(at(1190).stations[idx(sid(t, "Y"))], 1);
  EXPECT_EQ(at(1249).in_network, 1);
  EXPECT_EQ(at(1250).in_network, 0);
}

TEST(TraceCsv, Format) {
  const auto t = NetworkTopology::from_json(testsupport::kTwoStations);
  GroundTruthTrace trace;
  trace.trips.push_back({"p", sid(t, "X"), sid(t, "Y"), 1000, {100.5, 190.5, 250.0}});
  std::ostringstream out;
  write_trace_csv(out, trace, t);
  EXPECT_EQ(out.str(), "trip_id,entry_station,exit_station,entry_ts,boundaries\np,X,Y,1000,100.5;190.5;250\n");
}
