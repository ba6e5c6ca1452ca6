#include "railcrowd/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace railcrowd {

namespace {

constexpr std::array<const char*, kColorBins> kPalette = {"#ffffb2", "#fecc5c", "#fd8d3c", "#f03b20", "#bd0026"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string clock(Timestamp t) {
  const Timestamp tod = ((t % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(tod / 3600), static_cast<int>((tod % 3600) / 60));
  return buf;
}

}  // namespace

SnapshotSeries read_snapshot_stream(std::istream& in) {
  SnapshotSeries series;
  std::map<std::string, std::size_t> component_index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("time,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string time_s, id, kind, value_s;
    if (!std::getline(ss, time_s, ',') || !std::getline(ss, id, ',') || !std::getline(ss, kind, ',') ||
        !std::getline(ss, value_s)) {
      throw ParseError("snapshot stream line " + std::to_string(line_no) + ": expected 4 fields");
    }
    Timestamp t = 0;
    double value = 0.0;
    try {
      t = std::stoll(time_s);
      value = std::stod(value_s);
    } catch (const std::exception&) {
      throw ParseError("snapshot stream line " + std::to_string(line_no) + ": bad number");
    }
    if (series.times.empty() || series.times.back() != t) {
      series.times.push_back(t);
      series.values.emplace_back(series.components.size(), 0.0);
      series.totals.push_back(0.0);
    }
    if (kind == "system") {
      series.totals.back() = value;
      continue;
    }
    auto [it, inserted] = component_index.emplace(id, series.components.size());
    if (inserted) {
      series.components.push_back(id);
      series.kinds.push_back(kind);
      for (auto& row : series.values) row.push_back(0.0);
    }
    series.values.back()[it->second] = value;
  }
  return series;
}

SnapshotSeries series_from_snapshots(std::span<const CrowdednessSnapshot> snapshots, const NetworkTopology& topology,
                                     bool fold_transfers) {
  std::stringstream ss;
  for (const auto& snap : snapshots) write_snapshot_csv(ss, snap, topology, fold_transfers, true, false);
  return read_snapshot_stream(ss);
}

void write_time_series_csv(std::ostream& out, const SnapshotSeries& series) {
  out << "time";
  for (const auto& c : series.components) out << ',' << c;
  out << ",TOTAL\n";
  for (std::size_t t = 0; t < series.times.size(); ++t) {
    out << series.times[t];
    for (double v : series.values[t]) out << ',' << fmt("%.6f", v);
    out << ',' << fmt("%.6f", series.totals[t]) << '\n';
  }
}

ColorEdges color_bin_edges(const SnapshotSeries& series) {
  std::vector<double> all;
  for (const auto& row : series.values) all.insert(all.end(), row.begin(), row.end());
  ColorEdges edges{};
  if (all.empty()) return edges;
  std::sort(all.begin(), all.end());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const double q = static_cast<double>(k + 1) / static_cast<double>(kColorBins);
    edges[k] = all[static_cast<std::size_t>(std::floor(q * static_cast<double>(all.size() - 1)))];
  }
  return edges;
}

std::size_t color_bin(double value, const ColorEdges& edges) {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [&](double e) { return value > e; }));
}

std::string render_svg(const NetworkTopology& topology, const SnapshotSeries& series, std::size_t time_index,
                       const ColorEdges& edges) {
  for (const Station& s : topology.stations()) {
    if (!s.has_position()) throw ValidationError("missing layout coordinates for station '" + s.code + "'");
  }
  if (time_index >= series.times.size()) throw std::out_of_range("render_svg: no such snapshot");

  const double width = 1100.0, height = 720.0, margin = 70.0, legend = 140.0;
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const Station& s : topology.stations()) {
    min_x = std::min(min_x, *s.x);
    max_x = std::max(max_x, *s.x);
    min_y = std::min(min_y, *s.y);
    max_y = std::max(max_y, *s.y);
  }
  const double span_x = std::max(max_x - min_x, 1e-9);
  const double span_y = std::max(max_y - min_y, 1e-9);
  const double scale = std::min((width - legend - 2 * margin) / span_x, (height - 2 * margin) / span_y);
  auto px = [&](StationId s) { return margin + (*topology.station(s).x - min_x) * scale; };
  auto py = [&](StationId s) { return margin + (*topology.station(s).y - min_y) * scale; };

  std::map<std::string, double> value;
  for (std::size_t k = 0; k < series.components.size(); ++k) value[series.components[k]] = series.values[time_index][k];
  auto color_of = [&](const std::string& name) {
    auto it = value.find(name);
    return kPalette[color_bin(it == value.end() ? 0.0 : it->second, edges)];
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << margin << "\" y=\"30\" font-size=\"18\">Expected passengers at " << clock(series.times[time_index])
      << " (total " << fmt("%.1f", series.totals[time_index]) << ")</text>\n";

  // Parallel segments between the same two stations are drawn side by side.
  std::map<std::pair<std::size_t, std::size_t>, int> drawn;
  for (const Segment& seg : topology.segments()) {
    const auto key = std::minmax(idx(seg.a), idx(seg.b));
    const int k = drawn[key]++;
    const double x1 = px(seg.a), y1 = py(seg.a), x2 = px(seg.b), y2 = py(seg.b);
    const double len = std::max(std::hypot(x2 - x1, y2 - y1), 1e-9);
    const double off = 7.0 * k;
    const double ox = -(y2 - y1) / len * off, oy = (x2 - x1) / len * off;
    svg << "<line x1=\"" << fmt("%.1f", x1 + ox) << "\" y1=\"" << fmt("%.1f", y1 + oy) << "\" x2=\""
        << fmt("%.1f", x2 + ox) << "\" y2=\"" << fmt("%.1f", y2 + oy) << "\" stroke=\"" << color_of(seg.code)
        << "\" stroke-width=\"6\"><title>" << seg.code << ": " << fmt("%.2f", value[seg.code]) << "</title></line>\n";
    svg << "<line x1=\"" << fmt("%.1f", x1 + ox) << "\" y1=\"" << fmt("%.1f", y1 + oy) << "\" x2=\""
        << fmt("%.1f", x2 + ox) << "\" y2=\"" << fmt("%.1f", y2 + oy)
        << "\" stroke=\"#555\" stroke-width=\"0.5\"/>\n";
  }

  for (std::size_t s = 0; s < topology.station_count(); ++s) {
    const StationId id = make_id<StationId>(s);
    const std::string& code = topology.station(id).code;
    svg << "<circle cx=\"" << fmt("%.1f", px(id)) << "\" cy=\"" << fmt("%.1f", py(id)) << "\" r=\"8\" fill=\""
        << color_of(code) << "\" stroke=\"#333\"><title>" << code << ": " << fmt("%.2f", value[code])
        << "</title></circle>\n";
    svg << "<text x=\"" << fmt("%.1f", px(id) + 10) << "\" y=\"" << fmt("%.1f", py(id) + 18)
        << "\" font-size=\"10\">" << code << "</text>\n";
    if (topology.is_transfer_station(id)) {
      const std::string name = code + "/Trans";
      if (value.count(name)) {
        svg << "<rect x=\"" << fmt("%.1f", px(id) - 7) << "\" y=\"" << fmt("%.1f", py(id) - 32)
            << "\" width=\"14\" height=\"14\" fill=\"" << color_of(name) << "\" stroke=\"#333\"><title>" << name
            << ": " << fmt("%.2f", value[name]) << "</title></rect>\n";
        svg << "<text x=\"" << fmt("%.1f", px(id) + 10) << "\" y=\"" << fmt("%.1f", py(id) - 21)
            << "\" font-size=\"9\">" << name << "</text>\n";
      }
    }
  }

  const double lx = width - legend;
  svg << "<text x=\"" << lx << "\" y=\"" << margin << "\" font-size=\"12\">Expected count</text>\n";
  for (std::size_t b = 0; b < kColorBins; ++b) {
    const double y = margin + 12 + 24.0 * static_cast<double>(b);
    std::string label;
    if (b == 0) label = "<= " + fmt("%.1f", edges[0]);
    else if (b + 1 == kColorBins) label = "> " + fmt("%.1f", edges[b - 1]);
    else label = fmt("%.1f", edges[b - 1]) + " - " + fmt("%.1f", edges[b]);
    svg << "<rect x=\"" << lx << "\" y=\"" << y << "\" width=\"18\" height=\"18\" fill=\"" << kPalette[b]
        << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << lx + 24 << "\" y=\"" << y + 13 << "\" font-size=\"11\">" << label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace railcrowd
