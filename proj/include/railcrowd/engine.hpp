#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "railcrowd/desttable.hpp"
#include "railcrowd/ingest.hpp"
#include "railcrowd/loctable.hpp"
#include "railcrowd/network.hpp"

namespace railcrowd {

/// Location tables for every OD pair plus the destination table, ready for
/// online queries. The topology must outlive this object.
class InferenceTables {
 public:
  InferenceTables(const NetworkTopology& topology, std::vector<LocationTable> tables, DestinationTable destinations);

  const NetworkTopology& topology() const { return *topology_; }
  const DestinationTable& destinations() const { return destinations_; }
  std::span<const LocationTable> tables() const { return tables_; }

  /// Table for (from, to), or nullptr if none was built.
  const LocationTable* table(StationId from, StationId to) const;
  /// Action slots (NetworkTopology::action_slot) of the route of (from, to).
  std::span<const std::uint32_t> slots(StationId from, StationId to) const;

 private:
  const NetworkTopology* topology_;
  std::vector<LocationTable> tables_;
  DestinationTable destinations_;
  std::vector<std::int64_t> by_pair_;  // n*n -> position in tables_, -1 if missing
  std::vector<std::vector<std::uint32_t>> slots_;
};

struct TapEvent {
  enum class Kind : std::uint8_t { tap_in, tap_out };
  Kind kind = Kind::tap_in;
  std::string trip_id;
  StationId station{};
  Timestamp time = 0;
};

/// Tap-in and tap-out events of `records`, ordered by time (tap-outs first on
/// ties). Records without exit fields only tap in.
std::vector<TapEvent> events_from_records(std::span<const AfcRecord> records);

class EventError : public DataError {
 public:
  using DataError::DataError;
};

struct ActiveTrip {
  StationId station{};
  Timestamp entry_time = 0;
};

/// Passengers who have tapped in and not yet tapped out. Iteration is in
/// trip-id order so snapshots do not depend on event arrival order.
class ActivePassengerSet {
 public:
  explicit ActivePassengerSet(std::size_t station_count = 0) : per_station_(station_count, 0) {}

  /// Throws EventError on a duplicate tap-in or an unknown tap-out and leaves
  /// the set unchanged.
  void apply(const TapEvent& event);

  std::size_t size() const { return trips_.size(); }
  bool empty() const { return trips_.empty(); }
  std::size_t count_at(StationId s) const { return per_station_.at(idx(s)); }
  const std::map<std::string, ActiveTrip>& trips() const { return trips_; }

 private:
  std::map<std::string, ActiveTrip> trips_;
  std::vector<std::size_t> per_station_;
};

/// One term of the destination mixture: the probability that the passenger is
/// on `destination`'s route and performing its action at `position`.
struct ActionShare {
  StationId destination{};
  std::size_t position = 0;
  Action action;
  double probability = 0.0;
};

/// P(a | s, t_in, t_now - t_in) as a mixture over destinations. Actions of
/// different routes stay separate.
std::vector<ActionShare> action_distribution_for_passenger(StationId entry, Timestamp entry_time, Timestamp now,
                                                           const InferenceTables& tables);

/// Expected passenger counts at one instant.
struct CrowdednessSnapshot {
  Timestamp time = 0;
  std::size_t active = 0;
  std::vector<double> by_action;        // indexed by action slot
  std::vector<double> stations;         // enter + exit actions
  std::vector<double> segments;         // move actions
  std::vector<double> transfer_points;  // transfer actions, keyed by station

  double total() const;
  /// Station totals, optionally with the station's transfer point added.
  std::vector<double> station_totals(bool fold_transfers) const;
};

CrowdednessSnapshot snapshot(const ActivePassengerSet& set, Timestamp now, const InferenceTables& tables);

/// Writes `component_id,kind,expected_count` rows and a final system total
/// row. With `with_time`, each row is prefixed by the snapshot time.
void write_snapshot_csv(std::ostream& out, const CrowdednessSnapshot& snap, const NetworkTopology& topology,
                        bool fold_transfers, bool with_time, bool header);

/// Replays `events` and calls `emit` at every tick from..to (inclusive) in
/// steps of `cadence`, after applying every event with time <= tick.
void replay(std::span<const TapEvent> events, const InferenceTables& tables, Timestamp from, Timestamp to,
            Timestamp cadence, const std::function<void(const CrowdednessSnapshot&)>& emit);

}  // namespace railcrowd
