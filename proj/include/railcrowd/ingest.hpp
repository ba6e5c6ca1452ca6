#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "railcrowd/common.hpp"
#include "railcrowd/network.hpp"

namespace railcrowd {

/// One tap-in/tap-out record. Exit fields are empty for trips still in the
/// network (live streams).
struct AfcRecord {
  std::string trip_id;
  StationId entry_station{};
  Timestamp entry_time = 0;
  std::optional<StationId> exit_station;
  std::optional<Timestamp> exit_time;

  bool complete() const { return exit_station.has_value() && exit_time.has_value(); }
  double travel_time() const { return static_cast<double>(*exit_time - entry_time); }
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based line number in the input
  std::string text;
  std::string reason;
};

struct AfcParseResult {
  std::vector<AfcRecord> records;
  std::vector<RejectedRow> rejected;
};

inline constexpr const char* kAfcHeader = "trip_id,entry_station,entry_ts,exit_station,exit_ts";

/// Parses AFC CSV. A header row matching kAfcHeader is skipped if present.
/// Bad rows are returned with a reason; they never abort the parse.
AfcParseResult parse_afc_records(std::istream& in, const NetworkTopology& topology);
AfcParseResult parse_afc_file(const std::string& path, const NetworkTopology& topology);

void write_afc_records(std::ostream& out, std::span<const AfcRecord> records, const NetworkTopology& topology);

struct OdPair {
  StationId from{};
  StationId to{};
  friend auto operator<=>(const OdPair&, const OdPair&) = default;
};

/// Travel-time moments of one OD pair. `variance` uses the 1/N normalization.
struct OdMoments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
};

/// One-pass accumulator (Welford) with exact pairwise merge.
class MomentAccumulator {
 public:
  void add(double x);
  void merge(const MomentAccumulator& other);
  OdMoments moments() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

using OdTravelStats = std::map<OdPair, OdMoments>;

/// Per-pair count, mean and 1/N variance of complete records.
OdTravelStats build_od_stats(std::span<const AfcRecord> records);

/// Time-of-day bin of `t`: floor((t mod 86400) / bin_width).
std::size_t bin_time_of_day(Timestamp t, Timestamp bin_width);

inline constexpr Timestamp kDefaultBinWidth = 1800;

}  // namespace railcrowd
