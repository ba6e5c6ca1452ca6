#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "railcrowd/common.hpp"

namespace railcrowd {

struct Station {
  std::string code;
  std::optional<double> x;
  std::optional<double> y;

  bool has_position() const { return x.has_value() && y.has_value(); }
};

struct Line {
  std::string code;
  std::vector<StationId> stations;
  double headway = 0.0;  // seconds between trains
};

/// A railway segment between two adjacent stations of one line. Travel in
/// either direction occupies the same segment.
struct Segment {
  std::string code;
  LineId line{};
  StationId a{};
  StationId b{};
  double travel_time = 0.0;  // seconds, including dwell
};

/// A (line, station) pair. Entering and leaving through the same platform
/// share one walk variable.
struct Platform {
  LineId line{};
  StationId station{};
};

struct Transfer {
  StationId station{};
  LineId from{};
  LineId to{};
};

struct RouteLeg {
  LineId line{};
  StationId board{};
  StationId alight{};
};

struct RouteOverride {
  StationId from{};
  StationId to{};
  std::vector<RouteLeg> legs;
};

enum class ActionKind : std::uint8_t { enter = 0, move = 1, transfer = 2, exit = 3 };

/// One step of a trip. `ref` is a PlatformId for enter/exit, a SegmentId for
/// move, and a TransferId for transfer.
struct Action {
  ActionKind kind = ActionKind::enter;
  std::uint32_t ref = 0;

  static Action enter(PlatformId p) { return {ActionKind::enter, static_cast<std::uint32_t>(p)}; }
  static Action move(SegmentId s) { return {ActionKind::move, static_cast<std::uint32_t>(s)}; }
  static Action transfer(TransferId t) { return {ActionKind::transfer, static_cast<std::uint32_t>(t)}; }
  static Action exit(PlatformId p) { return {ActionKind::exit, static_cast<std::uint32_t>(p)}; }

  friend bool operator==(const Action&, const Action&) = default;
};

enum class ComponentKind : std::uint8_t { station = 0, segment = 1, transfer_point = 2 };

/// A spatial unit whose occupancy is inferred. Transfer points are keyed by
/// station index.
struct ComponentRef {
  ComponentKind kind = ComponentKind::station;
  std::uint32_t index = 0;

  friend auto operator<=>(const ComponentRef&, const ComponentRef&) = default;
};

class NetworkTopology {
 public:
  /// Parses and validates a JSON topology document.
  static NetworkTopology from_json(std::string_view document);
  static NetworkTopology from_file(const std::string& path);

  std::size_t station_count() const { return stations_.size(); }
  std::size_t line_count() const { return lines_.size(); }
  std::size_t segment_count() const { return segments_.size(); }
  std::size_t platform_count() const { return platforms_.size(); }
  std::size_t transfer_count() const { return transfers_.size(); }

  const Station& station(StationId s) const { return stations_.at(idx(s)); }
  const Line& line(LineId l) const { return lines_.at(idx(l)); }
  const Segment& segment(SegmentId s) const { return segments_.at(idx(s)); }
  const Platform& platform(PlatformId p) const { return platforms_.at(idx(p)); }
  const Transfer& transfer(TransferId t) const { return transfers_.at(idx(t)); }

  std::span<const Station> stations() const { return stations_; }
  std::span<const Line> lines() const { return lines_; }
  std::span<const Segment> segments() const { return segments_; }
  std::span<const Platform> platforms() const { return platforms_; }
  std::span<const Transfer> transfers() const { return transfers_; }
  std::span<const RouteOverride> route_overrides() const { return overrides_; }

  std::optional<StationId> find_station(std::string_view code) const;
  std::optional<LineId> find_line(std::string_view code) const;
  std::optional<PlatformId> find_platform(LineId line, StationId station) const;
  std::optional<SegmentId> find_segment(LineId line, StationId a, StationId b) const;
  std::optional<TransferId> find_transfer(StationId station, LineId from, LineId to) const;
  const RouteOverride* find_override(StationId from, StationId to) const;

  /// Lines serving `s`, in declaration order.
  std::vector<LineId> lines_at(StationId s) const;
  bool is_transfer_station(StationId s) const;

  /// The component an action occupies.
  ComponentRef component_of(const Action& a) const;
  std::string component_name(ComponentRef c) const;
  std::string describe(const Action& a) const;

  /// Dense numbering of every distinct action in the network: enter per
  /// platform, exit per platform, move per segment, transfer per transfer.
  std::size_t action_slot_count() const;
  std::size_t action_slot(const Action& a) const;
  Action action_at_slot(std::size_t slot) const;

  /// Stable 64-bit content hash of the canonical topology.
  std::uint64_t fingerprint() const;

 private:
  NetworkTopology() = default;
  void validate() const;
  void index();

  std::vector<Station> stations_;
  std::vector<Line> lines_;
  std::vector<Segment> segments_;
  std::vector<Platform> platforms_;
  std::vector<Transfer> transfers_;
  std::vector<RouteOverride> overrides_;

  std::unordered_map<std::string, StationId> station_by_code_;
  std::unordered_map<std::string, LineId> line_by_code_;
  std::vector<std::vector<LineId>> lines_at_;
};

struct Route {
  StationId from{};
  StationId to{};
  PlatformId entry{};
  PlatformId exit{};
  std::vector<Action> actions;

  std::size_t size() const { return actions.size(); }
  std::vector<SegmentId> segments() const;
  std::vector<TransferId> transfers() const;
};

enum class WalkVariableKind : std::uint8_t { platform = 0, transfer = 1 };

struct WalkVariable {
  WalkVariableKind kind = WalkVariableKind::platform;
  std::uint32_t ref = 0;  // PlatformId or TransferId
  std::string name;
};

/// Ordered list of walk-time random variables: one per platform (shared by
/// entry and exit), then one per directed transfer.
class WalkVariableIndex {
 public:
  explicit WalkVariableIndex(const NetworkTopology& topology);

  std::size_t size() const { return vars_.size(); }
  const WalkVariable& operator[](std::size_t l) const { return vars_.at(l); }
  std::span<const WalkVariable> variables() const { return vars_; }

  std::size_t of_platform(PlatformId p) const { return idx(p); }
  std::size_t of_transfer(TransferId t) const { return platform_count_ + idx(t); }
  /// Walk variable used by an enter/exit/transfer action; nullopt for moves.
  std::optional<std::size_t> of_action(const Action& a) const;
  std::optional<std::size_t> find(std::string_view name) const;

 private:
  std::vector<WalkVariable> vars_;
  std::size_t platform_count_ = 0;
};

inline constexpr double kDefaultWalkMean = 60.0;

/// Minimum-expected-time route from `from` to `to`. Walk means are indexed by
/// WalkVariableIndex; an empty span uses `default_walk_mean` everywhere.
/// Configured route overrides take precedence.
Route compute_route(const NetworkTopology& topology, StationId from, StationId to,
                    std::span<const double> walk_means = {},
                    double default_walk_mean = kDefaultWalkMean);

/// Expected route duration: headway halves and segment times plus walk means.
double expected_route_time(const NetworkTopology& topology, const Route& route,
                           std::span<const double> walk_means,
                           double default_walk_mean = kDefaultWalkMean);

/// Routes for every ordered pair of distinct stations.
class RouteTable {
 public:
  RouteTable() = default;
  RouteTable(const NetworkTopology& topology, std::span<const double> walk_means = {},
             double default_walk_mean = kDefaultWalkMean);

  std::size_t station_count() const { return n_; }
  std::size_t size() const { return routes_.size(); }
  const Route& at(StationId from, StationId to) const;
  std::span<const Route> routes() const { return routes_; }

 private:
  std::size_t n_ = 0;
  std::vector<Route> routes_;
  std::vector<std::int64_t> slot_;  // n*n -> position in routes_, -1 on diagonal
};

}  // namespace railcrowd
