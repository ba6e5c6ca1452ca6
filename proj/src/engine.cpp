#include "railcrowd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace railcrowd {

InferenceTables::InferenceTables(const NetworkTopology& topology, std::vector<LocationTable> tables,
                                 DestinationTable destinations)
    : topology_(&topology), tables_(std::move(tables)), destinations_(std::move(destinations)) {
  const std::size_t n = topology.station_count();
  if (destinations_.station_count() != n) {
    throw std::invalid_argument("destination table does not match the topology's station count");
  }
  by_pair_.assign(n * n, -1);
  slots_.resize(tables_.size());
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    const Route& route = tables_[k].route();
    if (idx(route.from) >= n || idx(route.to) >= n) throw std::out_of_range("location table for unknown station");
    by_pair_[idx(route.from) * n + idx(route.to)] = static_cast<std::int64_t>(k);
    for (const Action& a : route.actions) slots_[k].push_back(static_cast<std::uint32_t>(topology.action_slot(a)));
  }
}

const LocationTable* InferenceTables::table(StationId from, StationId to) const {
  const std::size_t n = topology_->station_count();
  const std::size_t k = idx(from) * n + idx(to);
  if (k >= by_pair_.size() || by_pair_[k] < 0) return nullptr;
  return &tables_[static_cast<std::size_t>(by_pair_[k])];
}

std::span<const std::uint32_t> InferenceTables::slots(StationId from, StationId to) const {
  const std::size_t n = topology_->station_count();
  const std::int64_t k = by_pair_.at(idx(from) * n + idx(to));
  if (k < 0) return {};
  return slots_[static_cast<std::size_t>(k)];
}

std::vector<TapEvent> events_from_records(std::span<const AfcRecord> records) {
  std::vector<TapEvent> events;
  events.reserve(records.size() * 2);
  for (const AfcRecord& r : records) {
    events.push_back({TapEvent::Kind::tap_in, r.trip_id, r.entry_station, r.entry_time});
    if (r.complete()) events.push_back({TapEvent::Kind::tap_out, r.trip_id, *r.exit_station, *r.exit_time});
  }
  std::stable_sort(events.begin(), events.end(), [](const TapEvent& a, const TapEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.kind == TapEvent::Kind::tap_out && b.kind == TapEvent::Kind::tap_in;
  });
  return events;
}

void ActivePassengerSet::apply(const TapEvent& event) {
  if (idx(event.station) >= per_station_.size()) throw EventError("event for unknown station index");
  if (event.kind == TapEvent::Kind::tap_in) {
    auto [it, inserted] = trips_.emplace(event.trip_id, ActiveTrip{event.station, event.time});
    if (!inserted) throw EventError("duplicate tap-in for trip '" + event.trip_id + "'");
    ++per_station_[idx(event.station)];
    return;
  }
  auto it = trips_.find(event.trip_id);
  if (it == trips_.end()) throw EventError("tap-out for unknown trip '" + event.trip_id + "'");
  --per_station_[idx(it->second.station)];
  trips_.erase(it);
}

namespace {

// Adds weight * P(action | route, elapsed) for every action of the route
// (from, to) into `sink(position, slot, value)`.
template <class Sink>
void add_route_row(const InferenceTables& tables, StationId from, StationId to, double elapsed, double weight,
                   Sink&& sink) {
  const LocationTable* table = tables.table(from, to);
  if (!table) {
    const auto& topo = tables.topology();
    throw DataError("no location table for " + topo.station(from).code + " -> " + topo.station(to).code);
  }
  const auto slots = tables.slots(from, to);
  const std::size_t m = table->action_count();
  if (std::round(elapsed / table->step()) > static_cast<double>(table->horizon())) {
    // Past the simulated horizon: about to leave.
    sink(m - 1, slots[m - 1], weight);
    return;
  }
  const auto row = table->location_distribution(elapsed);
  for (std::size_t c = 0; c < m; ++c) {
    if (row[c] != 0.0) sink(c, slots[c], weight * row[c]);
  }
}

}  // namespace

std::vector<ActionShare> action_distribution_for_passenger(StationId entry, Timestamp entry_time, Timestamp now,
                                                           const InferenceTables& tables) {
  if (now < entry_time) throw std::invalid_argument("query time precedes the entry time");
  const double elapsed = static_cast<double>(now - entry_time);
  const auto dest = tables.destinations().distribution(entry, entry_time, elapsed);
  std::vector<ActionShare> shares;
  for (std::size_t t = 0; t < dest.size(); ++t) {
    if (dest[t] <= 0.0) continue;
    const StationId to = make_id<StationId>(t);
    const LocationTable* table = tables.table(entry, to);
    add_route_row(tables, entry, to, elapsed, dest[t], [&](std::size_t c, std::uint32_t, double p) {
      shares.push_back({to, c, table->route().actions[c], p});
    });
  }
  return shares;
}

double CrowdednessSnapshot::total() const {
  double s = 0.0;
  for (double v : by_action) s += v;
  return s;
}

std::vector<double> CrowdednessSnapshot::station_totals(bool fold_transfers) const {
  std::vector<double> out = stations;
  if (fold_transfers) {
    for (std::size_t s = 0; s < out.size(); ++s) out[s] += transfer_points[s];
  }
  return out;
}

CrowdednessSnapshot snapshot(const ActivePassengerSet& set, Timestamp now, const InferenceTables& tables) {
  const NetworkTopology& topo = tables.topology();
  const std::size_t n = topo.station_count();
  CrowdednessSnapshot snap;
  snap.time = now;
  snap.active = set.size();
  snap.by_action.assign(topo.action_slot_count(), 0.0);

  std::vector<double> dest(n, 0.0);
  for (const auto& [trip_id, trip] : set.trips()) {
    if (now < trip.entry_time) throw std::invalid_argument("trip '" + trip_id + "' enters after the snapshot time");
    const double elapsed = static_cast<double>(now - trip.entry_time);
    tables.destinations().distribution(trip.station, trip.entry_time, elapsed, std::span<double>(dest));
    for (std::size_t t = 0; t < n; ++t) {
      if (dest[t] <= 0.0) continue;
      add_route_row(tables, trip.station, make_id<StationId>(t), elapsed, dest[t],
                    [&](std::size_t, std::uint32_t slot, double p) { snap.by_action[slot] += p; });
    }
  }

  snap.stations.assign(n, 0.0);
  snap.segments.assign(topo.segment_count(), 0.0);
  snap.transfer_points.assign(n, 0.0);
  for (std::size_t slot = 0; slot < snap.by_action.size(); ++slot) {
    const ComponentRef c = topo.component_of(topo.action_at_slot(slot));
    switch (c.kind) {
      case ComponentKind::station:
        snap.stations[c.index] += snap.by_action[slot];
        break;
      case ComponentKind::segment:
        snap.segments[c.index] += snap.by_action[slot];
        break;
      case ComponentKind::transfer_point:
        snap.transfer_points[c.index] += snap.by_action[slot];
        break;
    }
  }
  return snap;
}

void write_snapshot_csv(std::ostream& out, const CrowdednessSnapshot& snap, const NetworkTopology& topology,
                        bool fold_transfers, bool with_time, bool header) {
  char buf[64];
  auto row = [&](const std::string& id, const char* kind, double value) {
    std::snprintf(buf, sizeof buf, "%.17g", value);
    if (with_time) out << snap.time << ',';
    out << id << ',' << kind << ',' << buf << '\n';
  };
  if (header) out << (with_time ? "time," : "") << "component_id,kind,expected_count\n";
  const auto stations = snap.station_totals(fold_transfers);
  for (std::size_t s = 0; s < stations.size(); ++s) row(topology.station(make_id<StationId>(s)).code, "station", stations[s]);
  for (std::size_t g = 0; g < snap.segments.size(); ++g) {
    row(topology.segment(make_id<SegmentId>(g)).code, "segment", snap.segments[g]);
  }
  if (!fold_transfers) {
    for (std::size_t s = 0; s < snap.transfer_points.size(); ++s) {
      if (topology.is_transfer_station(make_id<StationId>(s))) {
        row(topology.component_name({ComponentKind::transfer_point, static_cast<std::uint32_t>(s)}), "transfer",
            snap.transfer_points[s]);
      }
    }
  }
  row("TOTAL", "system", snap.total());
}

void replay(std::span<const TapEvent> events, const InferenceTables& tables, Timestamp from, Timestamp to,
            Timestamp cadence, const std::function<void(const CrowdednessSnapshot&)>& emit) {
  if (cadence <= 0) throw std::invalid_argument("cadence must be positive");
  if (to < from) throw std::invalid_argument("replay window ends before it starts");
  ActivePassengerSet set(tables.topology().station_count());
  std::size_t next = 0;
  for (Timestamp tick = from; tick <= to; tick += cadence) {
    while (next < events.size() && events[next].time <= tick) set.apply(events[next++]);
    emit(snapshot(set, tick, tables));
  }
}

}  // namespace railcrowd
