#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "railcrowd/ingest.hpp"

namespace railcrowd {

/// Which evidence a destination distribution was computed from.
enum class DestinationSource : std::uint8_t {
  survivors = 0,    // same time-of-day bin, travel time > elapsed
  bin = 1,          // same bin, elapsed condition dropped
  whole_day = 2,    // all bins, elapsed condition dropped
  uniform = 3,      // no history from the station
};

/// Historical travel times grouped by (entry station, time-of-day bin,
/// destination), sorted for logarithmic survival queries.
class DestinationTable {
 public:
  DestinationTable() = default;
  DestinationTable(std::size_t station_count, Timestamp bin_width);

  std::size_t station_count() const { return n_; }
  Timestamp bin_width() const { return bin_width_; }
  std::size_t bin_count() const { return bins_; }
  std::size_t record_count() const { return records_; }
  bool empty() const { return records_ == 0; }

  /// Sorted travel times for (s, bin, s').
  std::span<const double> travel_times(StationId from, std::size_t bin, StationId to) const;

  /// Records from `from` in `bin` to `to` with travel time strictly above
  /// `elapsed`.
  std::size_t survivors(StationId from, std::size_t bin, StationId to, double elapsed) const;

  /// P(s' | s, t_in, elapsed) written into `out` (size station_count()).
  DestinationSource distribution(StationId from, Timestamp entry_time, double elapsed, std::span<double> out) const;
  std::vector<double> distribution(StationId from, Timestamp entry_time, double elapsed,
                                   DestinationSource* source = nullptr) const;

  /// Appends a record's travel time; call finalize() after the last insert.
  void insert(StationId from, std::size_t bin, StationId to, double travel_time);
  void finalize();

 private:
  std::size_t cell(StationId from, std::size_t bin, StationId to) const {
    return (idx(from) * bins_ + bin) * n_ + idx(to);
  }

  std::size_t n_ = 0;
  Timestamp bin_width_ = 0;
  std::size_t bins_ = 0;
  std::size_t records_ = 0;
  std::vector<std::vector<double>> cells_;  // [from][bin][to]
  std::vector<std::uint64_t> day_counts_;   // [from][to], all bins
  std::vector<std::uint64_t> bin_counts_;   // [from][bin][to] totals kept for the fallback
};

/// Groups complete records (s != s') by entry bin.
DestinationTable build_destination_table(std::span<const AfcRecord> records, std::size_t station_count,
                                         Timestamp bin_width = kDefaultBinWidth);

}  // namespace railcrowd
