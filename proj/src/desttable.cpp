#include "railcrowd/desttable.hpp"

#include <algorithm>
#include <stdexcept>

namespace railcrowd {

DestinationTable::DestinationTable(std::size_t station_count, Timestamp bin_width)
    : n_(station_count), bin_width_(bin_width) {
  if (bin_width <= 0) throw std::invalid_argument("destination table: bin width must be positive");
  bins_ = static_cast<std::size_t>((kSecondsPerDay + bin_width - 1) / bin_width);
  cells_.assign(n_ * bins_ * n_, {});
  day_counts_.assign(n_ * n_, 0);
  bin_counts_.assign(n_ * bins_ * n_, 0);
}

void DestinationTable::insert(StationId from, std::size_t bin, StationId to, double travel_time) {
  if (idx(from) >= n_ || idx(to) >= n_ || bin >= bins_) throw std::out_of_range("destination table: bad cell");
  cells_[cell(from, bin, to)].push_back(travel_time);
  ++day_counts_[idx(from) * n_ + idx(to)];
  ++bin_counts_[cell(from, bin, to)];
  ++records_;
}

void DestinationTable::finalize() {
  for (auto& c : cells_) std::sort(c.begin(), c.end());
}

std::span<const double> DestinationTable::travel_times(StationId from, std::size_t bin, StationId to) const {
  return cells_.at(cell(from, bin, to));
}

std::size_t DestinationTable::survivors(StationId from, std::size_t bin, StationId to, double elapsed) const {
  const auto& times = cells_.at(cell(from, bin, to));
  return static_cast<std::size_t>(times.end() - std::upper_bound(times.begin(), times.end(), elapsed));
}

DestinationSource DestinationTable::distribution(StationId from, Timestamp entry_time, double elapsed,
                                                 std::span<double> out) const {
  if (idx(from) >= n_) throw std::out_of_range("destination table: unknown entry station");
  if (out.size() != n_) throw std::invalid_argument("destination table: output span has wrong size");
  const std::size_t bin = bin_time_of_day(entry_time, bin_width_);

  auto normalize = [&](double total) {
    for (double& p : out) p /= total;
  };

  double total = 0.0;
  for (std::size_t t = 0; t < n_; ++t) {
    const double c = t == idx(from) ? 0.0 : static_cast<double>(survivors(from, bin, make_id<StationId>(t), elapsed));
    out[t] = c;
    total += c;
  }
  if (total > 0.0) {
    normalize(total);
    return DestinationSource::survivors;
  }

  for (std::size_t t = 0; t < n_; ++t) {
    out[t] = t == idx(from) ? 0.0 : static_cast<double>(bin_counts_[cell(from, bin, make_id<StationId>(t))]);
    total += out[t];
  }
  if (total > 0.0) {
    normalize(total);
    return DestinationSource::bin;
  }

  for (std::size_t t = 0; t < n_; ++t) {
    out[t] = t == idx(from) ? 0.0 : static_cast<double>(day_counts_[idx(from) * n_ + t]);
    total += out[t];
  }
  if (total > 0.0) {
    normalize(total);
    return DestinationSource::whole_day;
  }

  // The topology is connected, so every other station is reachable.
  for (std::size_t t = 0; t < n_; ++t) out[t] = t == idx(from) ? 0.0 : 1.0;
  if (n_ > 1) normalize(static_cast<double>(n_ - 1));
  return DestinationSource::uniform;
}

std::vector<double> DestinationTable::distribution(StationId from, Timestamp entry_time, double elapsed,
                                                   DestinationSource* source) const {
  std::vector<double> out(n_, 0.0);
  const DestinationSource src = distribution(from, entry_time, elapsed, std::span<double>(out));
  if (source) *source = src;
  return out;
}

DestinationTable build_destination_table(std::span<const AfcRecord> records, std::size_t station_count,
                                         Timestamp bin_width) {
  DestinationTable table(station_count, bin_width);
  for (const AfcRecord& r : records) {
    if (!r.complete() || *r.exit_station == r.entry_station) continue;
    table.insert(r.entry_station, bin_time_of_day(r.entry_time, bin_width), *r.exit_station, r.travel_time());
  }
  table.finalize();
  return table;
}

}  // namespace railcrowd
