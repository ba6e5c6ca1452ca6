#include "railcrowd/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "railcrowd/loctable.hpp"

namespace railcrowd {

namespace {

using json = nlohmann::json;

Timestamp parse_clock(const json& v, const std::string& where) {
  if (v.is_number_integer()) return v.get<Timestamp>();
  if (!v.is_string()) throw ParseError("demand field '" + where + "': expected seconds or \"HH:MM\"");
  const std::string s = v.get<std::string>();
  int h = 0, m = 0, sec = 0;
  const int got = std::sscanf(s.c_str(), "%d:%d:%d", &h, &m, &sec);
  if (got < 2 || h < 0 || h > 24 || m < 0 || m > 59 || sec < 0 || sec > 59) {
    throw ParseError("demand field '" + where + "': bad clock time '" + s + "'");
  }
  return h * 3600 + m * 60 + sec;
}

std::vector<RateBucket> parse_buckets(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ParseError("demand field '" + where + "': expected array");
  std::vector<RateBucket> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const json& b = arr[i];
    if (!b.is_object() || !b.contains("start") || !b.contains("end") || !b.contains("rate")) {
      throw ParseError("demand field '" + w + "': needs start, end and rate");
    }
    RateBucket bucket{parse_clock(b["start"], w + ".start"), parse_clock(b["end"], w + ".end"), 0.0};
    if (!b["rate"].is_number()) throw ParseError("demand field '" + w + ".rate': expected number");
    bucket.trips_per_hour = b["rate"].get<double>();
    if (!(bucket.trips_per_hour >= 0.0)) throw ValidationError("demand field '" + w + "': rate must be >= 0");
    if (bucket.end <= bucket.start || bucket.start < 0 || bucket.end > kSecondsPerDay) {
      throw ValidationError("demand field '" + w + "': bucket must satisfy 0 <= start < end <= 86400");
    }
    out.push_back(bucket);
  }
  return out;
}

}  // namespace

DemandProfile DemandProfile::from_json(std::string_view document, const NetworkTopology& topology) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("demand: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("demand: document must be an object");
  DemandProfile profile;
  if (doc.contains("all_pairs")) {
    const auto buckets = parse_buckets(doc["all_pairs"], "all_pairs");
    profile = uniform(topology, buckets);
  }
  if (doc.contains("pairs")) {
    const json& pairs = doc["pairs"];
    if (!pairs.is_array()) throw ParseError("demand field 'pairs': expected array");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string w = "pairs[" + std::to_string(i) + "]";
      const json& p = pairs[i];
      if (!p.is_object() || !p.contains("from") || !p.contains("to") || !p.contains("buckets")) {
        throw ParseError("demand field '" + w + "': needs from, to and buckets");
      }
      auto from = topology.find_station(p["from"].get<std::string>());
      auto to = topology.find_station(p["to"].get<std::string>());
      if (!from || !to) throw ValidationError("demand field '" + w + "': unknown station");
      if (*from == *to) throw ValidationError("demand field '" + w + "': from and to are the same station");
      profile.pairs.push_back({{*from, *to}, parse_buckets(p["buckets"], w + ".buckets")});
    }
  }
  return profile;
}

DemandProfile DemandProfile::from_file(const std::string& path, const NetworkTopology& topology) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open demand file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), topology);
}

DemandProfile DemandProfile::uniform(const NetworkTopology& topology, std::span<const RateBucket> buckets) {
  DemandProfile profile;
  const std::size_t n = topology.station_count();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < n; ++t) {
      if (s == t) continue;
      profile.pairs.push_back({{make_id<StationId>(s), make_id<StationId>(t)}, {buckets.begin(), buckets.end()}});
    }
  }
  return profile;
}

double DemandProfile::expected_trips() const {
  double total = 0.0;
  for (const auto& od : pairs) {
    for (const auto& b : od.buckets) total += b.trips_per_hour * static_cast<double>(b.end - b.start) / 3600.0;
  }
  return total;
}

SimulatedDay generate_day(const NetworkTopology& topology, const RouteTable& routes, const ActionTimeModel& truth,
                          const DemandProfile& demand, int day, std::uint64_t seed) {
  const WalkVariableIndex index(topology);
  const Timestamp offset = static_cast<Timestamp>(day) * kSecondsPerDay;
  std::vector<TruthTrip> trips;

  for (std::size_t k = 0; k < demand.pairs.size(); ++k) {
    const OdDemand& od = demand.pairs[k];
    const Route& route = routes.at(od.pair.from, od.pair.to);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(day), k));
    for (const RateBucket& b : od.buckets) {
      const double expected = b.trips_per_hour * static_cast<double>(b.end - b.start) / 3600.0;
      if (expected <= 0.0) continue;
      const auto count = std::poisson_distribution<std::int64_t>(expected)(rng);
      std::uniform_real_distribution<double> when(static_cast<double>(b.start), static_cast<double>(b.end));
      for (std::int64_t i = 0; i < count; ++i) {
        TruthTrip trip;
        trip.from = od.pair.from;
        trip.to = od.pair.to;
        trip.entry_time = offset + static_cast<Timestamp>(std::floor(when(rng)));
        double elapsed = 0.0;
        for (const Action& a : route.actions) {
          elapsed += sample_action_time(a, topology, index, truth, rng);
          trip.boundaries.push_back(elapsed);
        }
        // Whole-second exit stamp; the exit walk absorbs the rounding.
        const std::size_t m = trip.boundaries.size();
        double total = std::round(elapsed);
        const double before_exit = m >= 2 ? trip.boundaries[m - 2] : 0.0;
        if (total <= before_exit) total = std::ceil(elapsed);
        if (total <= 0.0) total = 1.0;
        trip.boundaries.back() = total;
        trips.push_back(std::move(trip));
      }
    }
  }

  std::sort(trips.begin(), trips.end(), [](const TruthTrip& a, const TruthTrip& b) {
    if (a.entry_time != b.entry_time) return a.entry_time < b.entry_time;
    if (a.from != b.from) return a.from < b.from;
    if (a.to != b.to) return a.to < b.to;
    return a.boundaries.back() < b.boundaries.back();
  });

  SimulatedDay out;
  out.records.reserve(trips.size());
  char id[48];
  for (std::size_t i = 0; i < trips.size(); ++i) {
    std::snprintf(id, sizeof id, "d%d-%07zu", day, i);
    trips[i].trip_id = id;
    const TruthTrip& t = trips[i];
    out.records.push_back({t.trip_id, t.from, t.entry_time, t.to, t.exit_time()});
  }
  out.trace.trips = std::move(trips);
  return out;
}

ComponentCounts true_crowdedness(const GroundTruthTrace& trace, const RouteTable& routes,
                                 const NetworkTopology& topology, Timestamp t) {
  ComponentCounts counts;
  counts.stations.assign(topology.station_count(), 0);
  counts.segments.assign(topology.segment_count(), 0);
  counts.transfer_points.assign(topology.station_count(), 0);
  for (const TruthTrip& trip : trace.trips) {
    if (t < trip.entry_time || t >= trip.exit_time()) continue;
    const double elapsed = static_cast<double>(t - trip.entry_time);
    const auto c = static_cast<std::size_t>(
        std::upper_bound(trip.boundaries.begin(), trip.boundaries.end(), elapsed) - trip.boundaries.begin());
    const Action& action = routes.at(trip.from, trip.to).actions.at(c);
    const ComponentRef comp = topology.component_of(action);
    switch (comp.kind) {
      case ComponentKind::station:
        ++counts.stations[comp.index];
        break;
      case ComponentKind::segment:
        ++counts.segments[comp.index];
        break;
      case ComponentKind::transfer_point:
        ++counts.transfer_points[comp.index];
        break;
    }
    ++counts.in_network;
  }
  return counts;
}

void write_trace_csv(std::ostream& out, const GroundTruthTrace& trace, const NetworkTopology& topology) {
  out << "trip_id,entry_station,exit_station,entry_ts,boundaries\n";
  char buf[40];
  for (const TruthTrip& t : trace.trips) {
    out << t.trip_id << ',' << topology.station(t.from).code << ',' << topology.station(t.to).code << ','
        << t.entry_time << ',';
    for (std::size_t c = 0; c < t.boundaries.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", t.boundaries[c]);
      out << (c ? ";" : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace railcrowd
