#include "railcrowd/loctable.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace railcrowd {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

double draw_walk(const WalkVariableModel& v, Rng& rng, SamplingMode mode) {
  if (mode == SamplingMode::mean_path) return v.mean;
  return std::gamma_distribution<double>(v.gamma.shape, v.gamma.scale)(rng);
}

double draw_wait(double headway, Rng& rng, SamplingMode mode) {
  if (mode == SamplingMode::mean_path) return headway / 2.0;
  return std::uniform_real_distribution<double>(0.0, headway)(rng);
}

const WalkVariableModel& walk_of(const Action& a, const NetworkTopology& topology, const WalkVariableIndex& index,
                                 const ActionTimeModel& model) {
  const auto l = index.of_action(a);
  if (!l || *l >= model.size()) {
    throw DataError("action time model does not cover '" + topology.describe(a) + "'");
  }
  return model.variables[*l];
}

}  // namespace

double sample_action_time(const Action& action, const NetworkTopology& topology, const WalkVariableIndex& index,
                          const ActionTimeModel& model, Rng& rng, SamplingMode mode) {
  switch (action.kind) {
    case ActionKind::enter: {
      const double walk = draw_walk(walk_of(action, topology, index, model), rng, mode);
      const double h = topology.line(topology.platform(make_id<PlatformId>(action.ref)).line).headway;
      return walk + draw_wait(h, rng, mode);
    }
    case ActionKind::move:
      return topology.segment(make_id<SegmentId>(action.ref)).travel_time;
    case ActionKind::transfer: {
      const double walk = draw_walk(walk_of(action, topology, index, model), rng, mode);
      const double h = topology.line(topology.transfer(make_id<TransferId>(action.ref)).to).headway;
      return walk + draw_wait(h, rng, mode);
    }
    case ActionKind::exit:
      return draw_walk(walk_of(action, topology, index, model), rng, mode);
  }
  return 0.0;
}

std::size_t auto_horizon(const NetworkTopology& topology, const Route& route, const ActionTimeModel& model,
                         double step) {
  const WalkVariableIndex index(topology);
  double mean = 0.0;
  double var = 0.0;
  for (const Action& a : route.actions) {
    double h = 0.0;
    if (a.kind == ActionKind::enter) h = topology.line(topology.platform(make_id<PlatformId>(a.ref)).line).headway;
    if (a.kind == ActionKind::transfer) h = topology.line(topology.transfer(make_id<TransferId>(a.ref)).to).headway;
    if (a.kind == ActionKind::move) {
      mean += topology.segment(make_id<SegmentId>(a.ref)).travel_time;
      continue;
    }
    const WalkVariableModel& w = walk_of(a, topology, index, model);
    mean += w.mean + h / 2.0;
    var += w.variance + h * h / 12.0;
  }
  const double span = std::min(mean + 6.0 * std::sqrt(var), kMaxHorizonSeconds);
  const auto cap = static_cast<std::size_t>(std::floor(kMaxHorizonSeconds / step));
  const auto r = static_cast<std::size_t>(std::ceil(span / step));
  return std::clamp<std::size_t>(r, 1, std::max<std::size_t>(cap, 1));
}

LocationTable::LocationTable(Route route, double step, std::size_t horizon, std::uint64_t samples,
                             std::vector<std::uint32_t> counts)
    : route_(std::move(route)), step_(step), horizon_(horizon), samples_(samples), counts_(std::move(counts)) {
  const std::size_t m = action_count();
  if (m == 0 || counts_.size() != (m + 1) * horizon_) {
    throw std::invalid_argument("LocationTable: count matrix does not match route and horizon");
  }
  probs_.assign(m * horizon_, 0.0);
  for (std::size_t r = 1; r <= horizon_; ++r) {
    const std::uint64_t total = in_network(r);
    double* col = probs_.data() + (r - 1) * m;
    if (total == 0) {
      col[m - 1] = 1.0;
      continue;
    }
    for (std::size_t c = 0; c < m; ++c) col[c] = static_cast<double>(count(c, r)) / static_cast<double>(total);
  }
}

std::uint64_t LocationTable::in_network(std::size_t r) const {
  std::uint64_t total = 0;
  for (std::size_t c = 0; c < action_count(); ++c) total += count(c, r);
  return total;
}

std::size_t LocationTable::column_for(double elapsed) const {
  const double r = std::round(std::max(elapsed, 0.0) / step_);
  if (r < 1.0) return 1;
  if (r >= static_cast<double>(horizon_)) return horizon_;
  return static_cast<std::size_t>(r);
}

LocationTable build_location_table(const Route& route, const NetworkTopology& topology, const ActionTimeModel& model,
                                   const LocationTableOptions& options) {
  if (options.samples < 1) throw std::invalid_argument("build_location_table: samples must be at least 1");
  if (!(options.step > 0.0)) throw std::invalid_argument("build_location_table: step must be positive");
  const std::size_t m = route.actions.size();
  const std::size_t horizon = options.horizon > 0 ? options.horizon : auto_horizon(topology, route, model, options.step);
  const WalkVariableIndex index(topology);
  Rng rng(options.seed);

  // Row-wise difference arrays over r = 1..R (slot R+1 absorbs range ends).
  std::vector<std::int64_t> diff((m + 1) * (horizon + 2), 0);
  auto add_range = [&](std::size_t row, double lo_time, double hi_time, bool open_end) {
    // r with lo_time < r*step <= hi_time (or r*step > lo_time when open_end)
    const double lo_r = std::floor(lo_time / options.step) + 1.0;
    const double hi_r = open_end ? static_cast<double>(horizon) : std::floor(hi_time / options.step);
    const double lo = std::max(lo_r, 1.0);
    const double hi = std::min(hi_r, static_cast<double>(horizon));
    if (lo > hi) return;
    std::int64_t* d = diff.data() + row * (horizon + 2);
    d[static_cast<std::size_t>(lo)] += 1;
    d[static_cast<std::size_t>(hi) + 1] -= 1;
  };

  for (std::uint64_t i = 0; i < options.samples; ++i) {
    double elapsed = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double phi = sample_action_time(route.actions[c], topology, index, model, rng, options.mode);
      add_range(c, elapsed, elapsed + phi, false);
      elapsed += phi;
    }
    add_range(m, elapsed, 0.0, true);
  }

  std::vector<std::uint32_t> counts((m + 1) * horizon, 0);
  for (std::size_t c = 0; c <= m; ++c) {
    const std::int64_t* d = diff.data() + c * (horizon + 2);
    std::int64_t running = 0;
    for (std::size_t r = 1; r <= horizon; ++r) {
      running += d[r];
      counts[(r - 1) * (m + 1) + c] = static_cast<std::uint32_t>(running);
    }
  }
  return LocationTable(route, options.step, horizon, options.samples, std::move(counts));
}

std::vector<LocationTable> build_location_tables(const RouteTable& routes, const NetworkTopology& topology,
                                                 const ActionTimeModel& model, const LocationTableOptions& options) {
  std::vector<LocationTable> tables;
  tables.reserve(routes.size());
  for (const Route& route : routes.routes()) {
    LocationTableOptions opt = options;
    opt.seed = derive_seed(options.seed, idx(route.from), idx(route.to));
    tables.push_back(build_location_table(route, topology, model, opt));
  }
  return tables;
}

}  // namespace railcrowd
