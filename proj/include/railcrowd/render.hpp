#pragma once

#include <array>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "railcrowd/engine.hpp"
#include "railcrowd/network.hpp"

namespace railcrowd {

/// Component time series: values[t][k] is the expected count of component k
/// at times[t]. The system total is kept apart from the components.
struct SnapshotSeries {
  std::vector<Timestamp> times;
  std::vector<std::string> components;
  std::vector<std::string> kinds;  // station | segment | transfer
  std::vector<std::vector<double>> values;
  std::vector<double> totals;
};

/// Reads the `time,component_id,kind,expected_count` stream written by
/// write_snapshot_csv(with_time = true).
SnapshotSeries read_snapshot_stream(std::istream& in);
SnapshotSeries series_from_snapshots(std::span<const CrowdednessSnapshot> snapshots, const NetworkTopology& topology,
                                     bool fold_transfers);

/// Wide CSV: `time,<component>...,TOTAL`, one row per snapshot.
void write_time_series_csv(std::ostream& out, const SnapshotSeries& series);

inline constexpr std::size_t kColorBins = 5;
using ColorEdges = std::array<double, kColorBins - 1>;

/// Quintile edges of every component value in the series.
ColorEdges color_bin_edges(const SnapshotSeries& series);
/// Number of edges strictly below `value`.
std::size_t color_bin(double value, const ColorEdges& edges);

/// SVG of one snapshot: stations and segments colored by bin, transfer points
/// as separate blocks next to their stations, and a legend. Throws
/// ValidationError when a station has no layout coordinates.
std::string render_svg(const NetworkTopology& topology, const SnapshotSeries& series, std::size_t time_index,
                       const ColorEdges& edges);

}  // namespace railcrowd
