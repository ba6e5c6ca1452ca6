#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "railcrowd/estimator.hpp"
#include "railcrowd/ingest.hpp"
#include "railcrowd/network.hpp"

namespace railcrowd {

/// Constant arrival rate over [start, end) seconds of the day.
struct RateBucket {
  Timestamp start = 0;
  Timestamp end = 0;
  double trips_per_hour = 0.0;
};

struct OdDemand {
  OdPair pair;
  std::vector<RateBucket> buckets;
};

/// Piecewise-constant Poisson arrival rates per OD pair.
///
/// JSON form:
///   { "all_pairs": [ {"start": "07:00", "end": "09:00", "rate": 12.0}, ... ],
///     "pairs": [ {"from": "A", "to": "F", "buckets": [ ... ]} ] }
/// `all_pairs` buckets apply to every ordered pair; `pairs` entries add to
/// them. Times are "HH:MM[:SS]" strings or seconds.
struct DemandProfile {
  std::vector<OdDemand> pairs;

  static DemandProfile from_json(std::string_view document, const NetworkTopology& topology);
  static DemandProfile from_file(const std::string& path, const NetworkTopology& topology);
  /// Same buckets for every ordered pair of distinct stations.
  static DemandProfile uniform(const NetworkTopology& topology, std::span<const RateBucket> buckets);

  double expected_trips() const;
};

/// Realized trip: `boundaries[c]` is the elapsed time at which action c ends,
/// so action c occupies [boundaries[c-1], boundaries[c]).
struct TruthTrip {
  std::string trip_id;
  StationId from{};
  StationId to{};
  Timestamp entry_time = 0;
  std::vector<double> boundaries;

  Timestamp exit_time() const { return entry_time + static_cast<Timestamp>(boundaries.back()); }
};

struct GroundTruthTrace {
  std::vector<TruthTrip> trips;
};

struct SimulatedDay {
  std::vector<AfcRecord> records;
  GroundTruthTrace trace;
};

/// One day of Poisson arrivals. Every action duration is drawn with
/// sample_action_time; the exit stamp is rounded to whole seconds and the
/// final (exit) action absorbs the rounding. Entry stamps are offset by
/// day * 86400.
SimulatedDay generate_day(const NetworkTopology& topology, const RouteTable& routes, const ActionTimeModel& truth,
                          const DemandProfile& demand, int day, std::uint64_t seed);

/// Exact occupancy of each component at time t.
struct ComponentCounts {
  std::vector<std::int64_t> stations;
  std::vector<std::int64_t> segments;
  std::vector<std::int64_t> transfer_points;
  std::int64_t in_network = 0;
};

ComponentCounts true_crowdedness(const GroundTruthTrace& trace, const RouteTable& routes,
                                 const NetworkTopology& topology, Timestamp t);

void write_trace_csv(std::ostream& out, const GroundTruthTrace& trace, const NetworkTopology& topology);

}  // namespace railcrowd
