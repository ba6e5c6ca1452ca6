#include "railcrowd/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

namespace railcrowd {

namespace {

using json = nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ParseError("topology field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) field_error(where + "." + key, "missing");
  return *it;
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) field_error(where, "expected string");
  return v.get<std::string>();
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) field_error(where, "expected number");
  return v.get<double>();
}

std::uint64_t segment_key(LineId line, StationId a, StationId b) {
  auto lo = std::min(idx(a), idx(b));
  auto hi = std::max(idx(a), idx(b));
  return (static_cast<std::uint64_t>(idx(line)) << 42) | (static_cast<std::uint64_t>(lo) << 21) | hi;
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

NetworkTopology NetworkTopology::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open topology file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

NetworkTopology NetworkTopology::from_json(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("topology: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("topology: document must be an object");

  NetworkTopology topo;

  const json& stations = require(doc, "stations", "topology");
  if (!stations.is_array()) field_error("stations", "expected array");
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const json& s = stations[i];
    std::string where = "stations[" + std::to_string(i) + "]";
    Station st;
    if (s.is_string()) {
      st.code = s.get<std::string>();
    } else if (s.is_object()) {
      st.code = get_string(require(s, "id", where), where + ".id");
      if (s.contains("x")) st.x = get_number(s["x"], where + ".x");
      if (s.contains("y")) st.y = get_number(s["y"], where + ".y");
    } else {
      field_error(where, "expected string or object");
    }
    if (st.code.empty()) field_error(where, "empty station id");
    if (!topo.station_by_code_.emplace(st.code, make_id<StationId>(topo.stations_.size())).second) {
      throw ValidationError("duplicate station '" + st.code + "'");
    }
    topo.stations_.push_back(std::move(st));
  }
  if (topo.stations_.empty()) throw ValidationError("topology has no stations");

  auto station_ref = [&](const json& v, const std::string& where) {
    std::string code = get_string(v, where);
    auto s = topo.find_station(code);
    if (!s) throw ValidationError(where + " references unknown station '" + code + "'");
    return *s;
  };

  const json& lines = require(doc, "lines", "topology");
  if (!lines.is_array() || lines.empty()) field_error("lines", "expected non-empty array");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const json& l = lines[i];
    std::string where = "lines[" + std::to_string(i) + "]";
    if (!l.is_object()) field_error(where, "expected object");
    Line line;
    line.code = get_string(require(l, "id", where), where + ".id");
    const json& ls = require(l, "stations", where);
    if (!ls.is_array()) field_error(where + ".stations", "expected array");
    for (std::size_t k = 0; k < ls.size(); ++k) {
      line.stations.push_back(station_ref(ls[k], where + ".stations[" + std::to_string(k) + "]"));
    }
    if (l.contains("headway")) line.headway = get_number(l["headway"], where + ".headway");
    if (!topo.line_by_code_.emplace(line.code, make_id<LineId>(topo.lines_.size())).second) {
      throw ValidationError("duplicate line '" + line.code + "'");
    }
    topo.lines_.push_back(std::move(line));
  }

  if (auto it = doc.find("headways"); it != doc.end()) {
    if (!it->is_object()) field_error("headways", "expected object");
    for (const auto& [code, value] : it->items()) {
      auto l = topo.find_line(code);
      if (!l) throw ValidationError("headways references unknown line '" + code + "'");
      topo.lines_[idx(*l)].headway = get_number(value, "headways." + code);
    }
  }

  auto line_ref = [&](const json& v, const std::string& where) {
    std::string code = get_string(v, where);
    auto l = topo.find_line(code);
    if (!l) throw ValidationError(where + " references unknown line '" + code + "'");
    return *l;
  };

  // Platforms must exist before transfer and override checks.
  for (std::size_t l = 0; l < topo.lines_.size(); ++l) {
    for (StationId s : topo.lines_[l].stations) {
      topo.platforms_.push_back({make_id<LineId>(l), s});
    }
  }

  const json& segments = require(doc, "segments", "topology");
  if (!segments.is_array()) field_error("segments", "expected array");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const json& g = segments[i];
    std::string where = "segments[" + std::to_string(i) + "]";
    if (!g.is_object()) field_error(where, "expected object");
    Segment seg;
    seg.a = station_ref(require(g, "from", where), where + ".from");
    seg.b = station_ref(require(g, "to", where), where + ".to");
    seg.travel_time = get_number(require(g, "time", where), where + ".time");
    if (g.contains("line")) {
      seg.line = line_ref(g["line"], where + ".line");
    } else {
      // Infer the owning line from adjacency; must be unique.
      std::vector<LineId> owners;
      for (std::size_t l = 0; l < topo.lines_.size(); ++l) {
        const auto& st = topo.lines_[l].stations;
        for (std::size_t k = 0; k + 1 < st.size(); ++k) {
          if ((st[k] == seg.a && st[k + 1] == seg.b) || (st[k] == seg.b && st[k + 1] == seg.a)) {
            owners.push_back(make_id<LineId>(l));
          }
        }
      }
      if (owners.size() != 1) {
        throw ValidationError(where + " (" + topo.stations_[idx(seg.a)].code + "-" +
                              topo.stations_[idx(seg.b)].code +
                              ") must be adjacent on exactly one line; add an explicit 'line'");
      }
      seg.line = owners.front();
    }
    seg.code = g.contains("id") ? get_string(g["id"], where + ".id")
                                : topo.stations_[idx(seg.a)].code + "-" + topo.stations_[idx(seg.b)].code;
    topo.segments_.push_back(std::move(seg));
  }

  if (auto it = doc.find("transfers"); it != doc.end()) {
    if (!it->is_array()) field_error("transfers", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& t = (*it)[i];
      std::string where = "transfers[" + std::to_string(i) + "]";
      if (!t.is_object()) field_error(where, "expected object");
      Transfer tr;
      tr.station = station_ref(require(t, "station", where), where + ".station");
      tr.from = line_ref(require(t, "from", where), where + ".from");
      tr.to = line_ref(require(t, "to", where), where + ".to");
      topo.transfers_.push_back(tr);
      if (t.value("bidirectional", false)) topo.transfers_.push_back({tr.station, tr.to, tr.from});
    }
  }

  if (auto it = doc.find("route_overrides"); it != doc.end()) {
    if (!it->is_array()) field_error("route_overrides", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& o = (*it)[i];
      std::string where = "route_overrides[" + std::to_string(i) + "]";
      if (!o.is_object()) field_error(where, "expected object");
      RouteOverride ov;
      ov.from = station_ref(require(o, "from", where), where + ".from");
      ov.to = station_ref(require(o, "to", where), where + ".to");
      const json& legs = require(o, "legs", where);
      if (!legs.is_array() || legs.empty()) field_error(where + ".legs", "expected non-empty array");
      StationId board = ov.from;
      for (std::size_t k = 0; k < legs.size(); ++k) {
        std::string lw = where + ".legs[" + std::to_string(k) + "]";
        RouteLeg leg;
        leg.line = line_ref(require(legs[k], "line", lw), lw + ".line");
        leg.board = board;
        leg.alight = station_ref(require(legs[k], "to", lw), lw + ".to");
        board = leg.alight;
        ov.legs.push_back(leg);
      }
      topo.overrides_.push_back(std::move(ov));
    }
  }

  topo.index();
  topo.validate();
  return topo;
}

void NetworkTopology::index() {
  lines_at_.assign(stations_.size(), {});
  for (std::size_t l = 0; l < lines_.size(); ++l) {
    for (StationId s : lines_[l].stations) {
      auto& at = lines_at_[idx(s)];
      if (std::find(at.begin(), at.end(), make_id<LineId>(l)) == at.end()) at.push_back(make_id<LineId>(l));
    }
  }
}

void NetworkTopology::validate() const {
  auto scode = [&](StationId s) { return stations_[idx(s)].code; };

  for (const Line& line : lines_) {
    if (line.stations.size() < 2) throw ValidationError("line '" + line.code + "' needs at least 2 stations");
    if (!(line.headway > 0.0)) throw ValidationError("line '" + line.code + "' needs a positive headway");
    std::vector<StationId> sorted = line.stations;
    std::sort(sorted.begin(), sorted.end());
    if (auto d = std::adjacent_find(sorted.begin(), sorted.end()); d != sorted.end()) {
      throw ValidationError("line '" + line.code + "' visits station '" + scode(*d) + "' twice");
    }
  }

  std::map<std::uint64_t, std::size_t> seen;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& seg = segments_[i];
    const Line& line = lines_[idx(seg.line)];
    if (!(seg.travel_time > 0.0)) throw ValidationError("segment '" + seg.code + "' needs a positive travel time");
    bool adjacent = false;
    for (std::size_t k = 0; k + 1 < line.stations.size(); ++k) {
      const auto u = line.stations[k];
      const auto v = line.stations[k + 1];
      if ((u == seg.a && v == seg.b) || (u == seg.b && v == seg.a)) adjacent = true;
    }
    if (!adjacent) {
      throw ValidationError("segment '" + seg.code + "' endpoints " + scode(seg.a) + "-" + scode(seg.b) +
                            " are not adjacent on line '" + line.code + "'");
    }
    if (!seen.emplace(segment_key(seg.line, seg.a, seg.b), i).second) {
      throw ValidationError("segment '" + seg.code + "' duplicates another segment on line '" + line.code + "'");
    }
  }
  for (std::size_t l = 0; l < lines_.size(); ++l) {
    const auto& st = lines_[l].stations;
    for (std::size_t k = 0; k + 1 < st.size(); ++k) {
      if (!find_segment(make_id<LineId>(l), st[k], st[k + 1])) {
        throw ValidationError("line '" + lines_[l].code + "' has no segment between " + scode(st[k]) + " and " +
                              scode(st[k + 1]));
      }
    }
  }

  for (const Transfer& t : transfers_) {
    std::string name = scode(t.station) + " " + lines_[idx(t.from)].code + ">" + lines_[idx(t.to)].code;
    if (t.from == t.to) throw ValidationError("transfer " + name + " connects a line to itself");
    if (!find_platform(t.from, t.station) || !find_platform(t.to, t.station)) {
      throw ValidationError("transfer " + name + " requires the station on both lines");
    }
    if (lines_at_[idx(t.station)].size() < 2) {
      throw ValidationError("transfer station '" + scode(t.station) + "' must be served by at least 2 lines");
    }
  }
  for (std::size_t i = 0; i < transfers_.size(); ++i) {
    for (std::size_t j = i + 1; j < transfers_.size(); ++j) {
      const auto& a = transfers_[i];
      const auto& b = transfers_[j];
      if (a.station == b.station && a.from == b.from && a.to == b.to) {
        throw ValidationError("transfer at '" + scode(a.station) + "' declared twice");
      }
    }
  }

  for (const RouteOverride& ov : overrides_) {
    std::string name = "route override " + scode(ov.from) + "->" + scode(ov.to);
    if (ov.from == ov.to) throw ValidationError(name + " has identical endpoints");
    for (std::size_t k = 0; k < ov.legs.size(); ++k) {
      const RouteLeg& leg = ov.legs[k];
      if (!find_platform(leg.line, leg.board) || !find_platform(leg.line, leg.alight) || leg.board == leg.alight) {
        throw ValidationError(name + ": leg " + std::to_string(k) + " is not a ride on line '" +
                              lines_[idx(leg.line)].code + "'");
      }
      if (k > 0 && !find_transfer(leg.board, ov.legs[k - 1].line, leg.line)) {
        throw ValidationError(name + ": no transfer defined at '" + scode(leg.board) + "'");
      }
    }
    if (ov.legs.back().alight != ov.to) throw ValidationError(name + ": last leg does not reach the destination");
  }

  // Every ordered pair must be connected through rides and declared transfers.
  const std::size_t np = platforms_.size();
  for (std::size_t s = 0; s < stations_.size(); ++s) {
    std::vector<char> reached(np, 0);
    std::vector<std::size_t> stack;
    for (std::size_t p = 0; p < np; ++p) {
      if (idx(platforms_[p].station) == s) {
        reached[p] = 1;
        stack.push_back(p);
      }
    }
    while (!stack.empty()) {
      std::size_t p = stack.back();
      stack.pop_back();
      const Platform& pl = platforms_[p];
      const auto& st = lines_[idx(pl.line)].stations;
      auto pos = static_cast<std::size_t>(std::find(st.begin(), st.end(), pl.station) - st.begin());
      auto visit = [&](std::optional<PlatformId> q) {
        if (q && !reached[idx(*q)]) {
          reached[idx(*q)] = 1;
          stack.push_back(idx(*q));
        }
      };
      if (pos > 0) visit(find_platform(pl.line, st[pos - 1]));
      if (pos + 1 < st.size()) visit(find_platform(pl.line, st[pos + 1]));
      for (const Transfer& t : transfers_) {
        if (t.station == pl.station && t.from == pl.line) visit(find_platform(t.to, t.station));
      }
    }
    std::vector<char> station_reached(stations_.size(), 0);
    for (std::size_t p = 0; p < np; ++p) {
      if (reached[p]) station_reached[idx(platforms_[p].station)] = 1;
    }
    for (std::size_t t = 0; t < stations_.size(); ++t) {
      if (!station_reached[t]) {
        throw ValidationError("network is disconnected: station '" + stations_[t].code + "' unreachable from '" +
                              stations_[s].code + "'");
      }
    }
  }
}

std::optional<StationId> NetworkTopology::find_station(std::string_view code) const {
  auto it = station_by_code_.find(std::string(code));
  if (it == station_by_code_.end()) return std::nullopt;
  return it->second;
}

std::optional<LineId> NetworkTopology::find_line(std::string_view code) const {
  auto it = line_by_code_.find(std::string(code));
  if (it == line_by_code_.end()) return std::nullopt;
  return it->second;
}

std::optional<PlatformId> NetworkTopology::find_platform(LineId line, StationId station) const {
  // Platforms are laid out line by line in station order.
  std::size_t offset = 0;
  for (std::size_t l = 0; l < idx(line); ++l) offset += lines_[l].stations.size();
  const auto& st = lines_.at(idx(line)).stations;
  auto it = std::find(st.begin(), st.end(), station);
  if (it == st.end()) return std::nullopt;
  return make_id<PlatformId>(offset + static_cast<std::size_t>(it - st.begin()));
}

std::optional<SegmentId> NetworkTopology::find_segment(LineId line, StationId a, StationId b) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    if (s.line == line && ((s.a == a && s.b == b) || (s.a == b && s.b == a))) return make_id<SegmentId>(i);
  }
  return std::nullopt;
}

std::optional<TransferId> NetworkTopology::find_transfer(StationId station, LineId from, LineId to) const {
  for (std::size_t i = 0; i < transfers_.size(); ++i) {
    const Transfer& t = transfers_[i];
    if (t.station == station && t.from == from && t.to == to) return make_id<TransferId>(i);
  }
  return std::nullopt;
}

const RouteOverride* NetworkTopology::find_override(StationId from, StationId to) const {
  for (const auto& ov : overrides_) {
    if (ov.from == from && ov.to == to) return &ov;
  }
  return nullptr;
}

std::vector<LineId> NetworkTopology::lines_at(StationId s) const { return lines_at_.at(idx(s)); }

bool NetworkTopology::is_transfer_station(StationId s) const {
  return std::any_of(transfers_.begin(), transfers_.end(), [&](const Transfer& t) { return t.station == s; });
}

ComponentRef NetworkTopology::component_of(const Action& a) const {
  switch (a.kind) {
    case ActionKind::enter:
    case ActionKind::exit:
      return {ComponentKind::station, static_cast<std::uint32_t>(idx(platforms_.at(a.ref).station))};
    case ActionKind::move:
      return {ComponentKind::segment, a.ref};
    case ActionKind::transfer:
      return {ComponentKind::transfer_point, static_cast<std::uint32_t>(idx(transfers_.at(a.ref).station))};
  }
  return {};
}

std::string NetworkTopology::component_name(ComponentRef c) const {
  switch (c.kind) {
    case ComponentKind::station:
      return stations_.at(c.index).code;
    case ComponentKind::segment:
      return segments_.at(c.index).code;
    case ComponentKind::transfer_point:
      return stations_.at(c.index).code + "/Trans";
  }
  return {};
}

std::string NetworkTopology::describe(const Action& a) const {
  switch (a.kind) {
    case ActionKind::enter: {
      const Platform& p = platforms_.at(a.ref);
      return "Enter " + stations_[idx(p.station)].code + " (" + lines_[idx(p.line)].code + ")";
    }
    case ActionKind::move:
      return "Move " + segments_.at(a.ref).code;
    case ActionKind::transfer: {
      const Transfer& t = transfers_.at(a.ref);
      return "Transfer " + stations_[idx(t.station)].code + " " + lines_[idx(t.from)].code + ">" +
             lines_[idx(t.to)].code;
    }
    case ActionKind::exit: {
      const Platform& p = platforms_.at(a.ref);
      return "Exit " + stations_[idx(p.station)].code + " (" + lines_[idx(p.line)].code + ")";
    }
  }
  return {};
}

std::size_t NetworkTopology::action_slot_count() const {
  return 2 * platforms_.size() + segments_.size() + transfers_.size();
}

std::size_t NetworkTopology::action_slot(const Action& a) const {
  const std::size_t np = platforms_.size();
  switch (a.kind) {
    case ActionKind::enter:
      return a.ref;
    case ActionKind::exit:
      return np + a.ref;
    case ActionKind::move:
      return 2 * np + a.ref;
    case ActionKind::transfer:
      return 2 * np + segments_.size() + a.ref;
  }
  return 0;
}

Action NetworkTopology::action_at_slot(std::size_t slot) const {
  const std::size_t np = platforms_.size();
  const std::size_t ns = segments_.size();
  if (slot < np) return Action::enter(make_id<PlatformId>(slot));
  if (slot < 2 * np) return Action::exit(make_id<PlatformId>(slot - np));
  if (slot < 2 * np + ns) return Action::move(make_id<SegmentId>(slot - 2 * np));
  return Action::transfer(make_id<TransferId>(slot - 2 * np - ns));
}

std::uint64_t NetworkTopology::fingerprint() const {
  // Layout coordinates are excluded: they do not affect any table.
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "stations";
  for (const auto& s : stations_) os << '|' << s.code;
  os << "\nlines";
  for (const auto& l : lines_) {
    os << '|' << l.code << '@' << num(l.headway) << ':';
    for (StationId s : l.stations) os << idx(s) << ',';
  }
  os << "\nsegments";
  for (const auto& s : segments_) {
    os << '|' << s.code << ':' << idx(s.line) << ',' << idx(s.a) << ',' << idx(s.b) << ',' << num(s.travel_time);
  }
  os << "\ntransfers";
  for (const auto& t : transfers_) os << '|' << idx(t.station) << ',' << idx(t.from) << ',' << idx(t.to);
  os << "\noverrides";
  for (const auto& o : overrides_) {
    os << '|' << idx(o.from) << '>' << idx(o.to) << ':';
    for (const auto& leg : o.legs) os << idx(leg.line) << ',' << idx(leg.board) << ',' << idx(leg.alight) << ';';
  }
  return fnv1a(os.str());
}

std::vector<SegmentId> Route::segments() const {
  std::vector<SegmentId> out;
  for (const Action& a : actions) {
    if (a.kind == ActionKind::move) out.push_back(make_id<SegmentId>(a.ref));
  }
  return out;
}

std::vector<TransferId> Route::transfers() const {
  std::vector<TransferId> out;
  for (const Action& a : actions) {
    if (a.kind == ActionKind::transfer) out.push_back(make_id<TransferId>(a.ref));
  }
  return out;
}

WalkVariableIndex::WalkVariableIndex(const NetworkTopology& topology) : platform_count_(topology.platform_count()) {
  for (std::size_t p = 0; p < topology.platform_count(); ++p) {
    const Platform& pl = topology.platform(make_id<PlatformId>(p));
    vars_.push_back({WalkVariableKind::platform, static_cast<std::uint32_t>(p),
                     topology.line(pl.line).code + ":" + topology.station(pl.station).code});
  }
  for (std::size_t t = 0; t < topology.transfer_count(); ++t) {
    const Transfer& tr = topology.transfer(make_id<TransferId>(t));
    vars_.push_back({WalkVariableKind::transfer, static_cast<std::uint32_t>(t),
                     topology.station(tr.station).code + ":" + topology.line(tr.from).code + ">" +
                         topology.line(tr.to).code});
  }
}

std::optional<std::size_t> WalkVariableIndex::of_action(const Action& a) const {
  switch (a.kind) {
    case ActionKind::enter:
    case ActionKind::exit:
      return of_platform(make_id<PlatformId>(a.ref));
    case ActionKind::transfer:
      return of_transfer(make_id<TransferId>(a.ref));
    case ActionKind::move:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<std::size_t> WalkVariableIndex::find(std::string_view name) const {
  for (std::size_t l = 0; l < vars_.size(); ++l) {
    if (vars_[l].name == name) return l;
  }
  return std::nullopt;
}

namespace {

double walk_mean(std::span<const double> means, std::size_t l, double fallback) {
  return l < means.size() ? means[l] : fallback;
}

// Dijkstra label over the line-expanded graph. Ordered by expected cost, then
// transfer count, then the line-code sequence, then the transfer-station code
// sequence. The order is preserved when two labels at the same node are
// extended by the same edge, so the greedy settle order is exact.
struct Label {
  double cost = std::numeric_limits<double>::infinity();
  int transfers = 0;
  std::vector<LineId> lines;
  std::vector<StationId> transfer_stations;
};

class LabelOrder {
 public:
  explicit LabelOrder(const NetworkTopology& topo) : topo_(topo) {}

  bool less(const Label& a, const Label& b) const {
    const double tol = 1e-9 * std::max(1.0, std::max(std::abs(a.cost), std::abs(b.cost)));
    if (a.cost < b.cost - tol) return true;
    if (b.cost < a.cost - tol) return false;
    if (a.transfers != b.transfers) return a.transfers < b.transfers;
    int c = compare_codes(a.lines, b.lines, [&](LineId l) -> const std::string& { return topo_.line(l).code; });
    if (c != 0) return c < 0;
    c = compare_codes(a.transfer_stations, b.transfer_stations,
                      [&](StationId s) -> const std::string& { return topo_.station(s).code; });
    return c < 0;
  }

 private:
  template <class Id, class Name>
  static int compare_codes(const std::vector<Id>& a, const std::vector<Id>& b, Name name) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      const int c = name(a[i]).compare(name(b[i]));
      if (c != 0) return c;
    }
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
  }

  const NetworkTopology& topo_;
};

Route route_from_override(const NetworkTopology& topo, const RouteOverride& ov) {
  Route route;
  route.from = ov.from;
  route.to = ov.to;
  route.entry = *topo.find_platform(ov.legs.front().line, ov.from);
  route.exit = *topo.find_platform(ov.legs.back().line, ov.to);
  route.actions.push_back(Action::enter(route.entry));
  for (std::size_t k = 0; k < ov.legs.size(); ++k) {
    const RouteLeg& leg = ov.legs[k];
    if (k > 0) route.actions.push_back(Action::transfer(*topo.find_transfer(leg.board, ov.legs[k - 1].line, leg.line)));
    const auto& st = topo.line(leg.line).stations;
    auto pos = [&](StationId s) { return std::find(st.begin(), st.end(), s) - st.begin(); };
    auto i = pos(leg.board);
    const auto j = pos(leg.alight);
    const int step = j > i ? 1 : -1;
    for (; i != j; i += step) {
      route.actions.push_back(Action::move(*topo.find_segment(leg.line, st[i], st[i + step])));
    }
  }
  route.actions.push_back(Action::exit(route.exit));
  return route;
}

}  // namespace

Route compute_route(const NetworkTopology& topo, StationId from, StationId to, std::span<const double> walk_means,
                    double default_walk_mean) {
  if (idx(from) >= topo.station_count() || idx(to) >= topo.station_count()) {
    throw std::out_of_range("compute_route: unknown station");
  }
  if (from == to) {
    throw std::invalid_argument("compute_route: entry and exit station are both '" + topo.station(from).code + "'");
  }
  if (const RouteOverride* ov = topo.find_override(from, to)) return route_from_override(topo, *ov);

  const WalkVariableIndex index(topo);
  const std::size_t np = topo.platform_count();
  const std::size_t sink = np;
  const LabelOrder order(topo);

  std::vector<Label> label(np + 1);
  std::vector<char> settled(np + 1, 0);
  std::vector<char> reached(np + 1, 0);
  struct Pred {
    std::size_t node = 0;
    Action action;
  };
  std::vector<Pred> pred(np + 1);

  auto relax = [&](std::size_t node, Label candidate, Pred p) {
    if (settled[node]) return;
    if (!reached[node] || order.less(candidate, label[node])) {
      label[node] = std::move(candidate);
      pred[node] = p;
      reached[node] = 1;
    }
  };

  for (LineId l : topo.lines_at(from)) {
    const PlatformId p = *topo.find_platform(l, from);
    Label lab;
    lab.cost = walk_mean(walk_means, index.of_platform(p), default_walk_mean) + topo.line(l).headway / 2.0;
    lab.lines = {l};
    relax(idx(p), std::move(lab), {idx(p), Action::enter(p)});
  }

  while (true) {
    std::size_t best = np + 1;
    for (std::size_t v = 0; v <= np; ++v) {
      if (reached[v] && !settled[v] && (best > np || order.less(label[v], label[best]))) best = v;
    }
    if (best > np) break;
    settled[best] = 1;
    if (best == sink) break;

    const Platform& pl = topo.platform(make_id<PlatformId>(best));
    const Label& cur = label[best];
    const auto& st = topo.line(pl.line).stations;
    const auto pos = static_cast<std::size_t>(std::find(st.begin(), st.end(), pl.station) - st.begin());
    for (int dir : {-1, +1}) {
      if ((dir < 0 && pos == 0) || (dir > 0 && pos + 1 >= st.size())) continue;
      const StationId next = st[pos + dir];
      const SegmentId seg = *topo.find_segment(pl.line, pl.station, next);
      Label lab = cur;
      lab.cost += topo.segment(seg).travel_time;
      relax(idx(*topo.find_platform(pl.line, next)), std::move(lab), {best, Action::move(seg)});
    }
    for (std::size_t t = 0; t < topo.transfer_count(); ++t) {
      const Transfer& tr = topo.transfer(make_id<TransferId>(t));
      if (tr.station != pl.station || tr.from != pl.line) continue;
      Label lab = cur;
      lab.cost += walk_mean(walk_means, index.of_transfer(make_id<TransferId>(t)), default_walk_mean) +
                  topo.line(tr.to).headway / 2.0;
      lab.transfers += 1;
      lab.lines.push_back(tr.to);
      lab.transfer_stations.push_back(tr.station);
      relax(idx(*topo.find_platform(tr.to, tr.station)), std::move(lab), {best, Action::transfer(make_id<TransferId>(t))});
    }
    if (pl.station == to) {
      Label lab = cur;
      lab.cost += walk_mean(walk_means, best, default_walk_mean);
      relax(sink, std::move(lab), {best, Action::exit(make_id<PlatformId>(best))});
    }
  }

  if (!settled[sink]) {
    throw DataError("no route from '" + topo.station(from).code + "' to '" + topo.station(to).code + "'");
  }

  Route route;
  route.from = from;
  route.to = to;
  std::size_t node = sink;
  while (true) {
    const Pred& p = pred[node];
    route.actions.push_back(p.action);
    if (p.action.kind == ActionKind::enter) break;
    node = p.node;
  }
  std::reverse(route.actions.begin(), route.actions.end());
  route.entry = make_id<PlatformId>(route.actions.front().ref);
  route.exit = make_id<PlatformId>(route.actions.back().ref);
  return route;
}

double expected_route_time(const NetworkTopology& topo, const Route& route, std::span<const double> walk_means,
                           double default_walk_mean) {
  const WalkVariableIndex index(topo);
  double total = 0.0;
  for (const Action& a : route.actions) {
    switch (a.kind) {
      case ActionKind::enter:
        total += walk_mean(walk_means, *index.of_action(a), default_walk_mean) +
                 topo.line(topo.platform(make_id<PlatformId>(a.ref)).line).headway / 2.0;
        break;
      case ActionKind::move:
        total += topo.segment(make_id<SegmentId>(a.ref)).travel_time;
        break;
      case ActionKind::transfer:
        total += walk_mean(walk_means, *index.of_action(a), default_walk_mean) +
                 topo.line(topo.transfer(make_id<TransferId>(a.ref)).to).headway / 2.0;
        break;
      case ActionKind::exit:
        total += walk_mean(walk_means, *index.of_action(a), default_walk_mean);
        break;
    }
  }
  return total;
}

RouteTable::RouteTable(const NetworkTopology& topology, std::span<const double> walk_means, double default_walk_mean)
    : n_(topology.station_count()), slot_(n_ * n_, -1) {
  routes_.reserve(n_ * (n_ - 1));
  for (std::size_t s = 0; s < n_; ++s) {
    for (std::size_t t = 0; t < n_; ++t) {
      if (s == t) continue;
      slot_[s * n_ + t] = static_cast<std::int64_t>(routes_.size());
      routes_.push_back(compute_route(topology, make_id<StationId>(s), make_id<StationId>(t), walk_means,
                                      default_walk_mean));
    }
  }
}

const Route& RouteTable::at(StationId from, StationId to) const {
  const std::size_t k = idx(from) * n_ + idx(to);
  if (k >= slot_.size() || slot_[k] < 0) throw std::out_of_range("RouteTable: no route for this pair");
  return routes_[static_cast<std::size_t>(slot_[k])];
}

}  // namespace railcrowd
