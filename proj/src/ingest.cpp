#include "railcrowd/ingest.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

namespace railcrowd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::optional<Timestamp> parse_ts(std::string_view s) {
  Timestamp v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

AfcParseResult parse_afc_records(std::istream& in, const NetworkTopology& topology) {
  if (!in) throw ParseError("AFC stream is not readable");
  AfcParseResult result;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line_no == 1 && line == kAfcHeader) continue;

    auto reject = [&](std::string reason) { result.rejected.push_back({line_no, raw, std::move(reason)}); };
    auto fields = split(line);
    if (fields.size() != 5) {
      reject("expected 5 fields, found " + std::to_string(fields.size()));
      continue;
    }
    AfcRecord rec;
    rec.trip_id = std::string(fields[0]);
    if (rec.trip_id.empty()) {
      reject("empty trip_id");
      continue;
    }
    auto entry = topology.find_station(fields[1]);
    if (!entry) {
      reject("unknown station '" + std::string(fields[1]) + "'");
      continue;
    }
    rec.entry_station = *entry;
    auto t_in = parse_ts(fields[2]);
    if (!t_in) {
      reject("bad entry timestamp '" + std::string(fields[2]) + "'");
      continue;
    }
    rec.entry_time = *t_in;

    const bool has_exit_station = !fields[3].empty();
    const bool has_exit_time = !fields[4].empty();
    if (has_exit_station != has_exit_time) {
      reject("exit station and exit timestamp must both be present or both empty");
      continue;
    }
    if (has_exit_station) {
      auto exit = topology.find_station(fields[3]);
      if (!exit) {
        reject("unknown station '" + std::string(fields[3]) + "'");
        continue;
      }
      auto t_out = parse_ts(fields[4]);
      if (!t_out) {
        reject("bad exit timestamp '" + std::string(fields[4]) + "'");
        continue;
      }
      if (*exit == *entry) {
        reject("same entry and exit station");
        continue;
      }
      if (*t_out <= *t_in) {
        reject("non-positive travel time");
        continue;
      }
      rec.exit_station = *exit;
      rec.exit_time = *t_out;
    }
    result.records.push_back(std::move(rec));
  }
  if (in.bad()) throw ParseError("error while reading AFC stream");
  return result;
}

AfcParseResult parse_afc_file(const std::string& path, const NetworkTopology& topology) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open AFC file '" + path + "'");
  return parse_afc_records(in, topology);
}

void write_afc_records(std::ostream& out, std::span<const AfcRecord> records, const NetworkTopology& topology) {
  out << kAfcHeader << '\n';
  for (const AfcRecord& r : records) {
    out << r.trip_id << ',' << topology.station(r.entry_station).code << ',' << r.entry_time << ',';
    if (r.complete()) out << topology.station(*r.exit_station).code << ',' << *r.exit_time;
    else out << ',';
    out << '\n';
  }
}

void MomentAccumulator::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

OdMoments MomentAccumulator::moments() const {
  if (n_ == 0) return {};
  double var = m2_ / static_cast<double>(n_);
  if (n_ == 1 || var < 0.0) var = 0.0;
  return {n_, mean_, var};
}

OdTravelStats build_od_stats(std::span<const AfcRecord> records) {
  std::map<OdPair, MomentAccumulator> acc;
  for (const AfcRecord& r : records) {
    if (!r.complete()) continue;
    acc[{r.entry_station, *r.exit_station}].add(r.travel_time());
  }
  OdTravelStats stats;
  for (const auto& [pair, a] : acc) stats.emplace(pair, a.moments());
  return stats;
}

std::size_t bin_time_of_day(Timestamp t, Timestamp bin_width) {
  if (bin_width <= 0) throw std::invalid_argument("bin width must be positive");
  const Timestamp tod = ((t % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  return static_cast<std::size_t>(tod / bin_width);
}

}  // namespace railcrowd
