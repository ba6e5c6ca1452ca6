#include "railcrowd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "railcrowd/desttable.hpp"
#include "railcrowd/engine.hpp"
#include "railcrowd/estimator.hpp"
#include "railcrowd/ingest.hpp"
#include "railcrowd/loctable.hpp"
#include "railcrowd/network.hpp"
#include "railcrowd/render.hpp"
#include "railcrowd/simgen.hpp"
#include "railcrowd/store.hpp"

namespace railcrowd {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string topology;
  std::string history;
  std::string events;
  std::string archive;
  std::string out;
  std::string model;
  std::string truth;
  std::string demand;
  std::string snapshots;
  std::string render;
  std::string from = "08:00";
  std::string to = "20:00";
  double delta = 15.0;
  std::size_t horizon = 0;
  std::uint64_t imax = 20000;
  Timestamp bin_width = kDefaultBinWidth;
  std::uint64_t nmin = 5;
  std::uint64_t seed = 1;
  Timestamp cadence = 600;
  int days = 1;
  int first_day = 0;
  bool fold_transfers = false;
};

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string("missing required option ") + flag);
  if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + ": no such file '" + path + "'");
}

void require_value(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

std::vector<AfcRecord> load_records(const std::string& path, const NetworkTopology& topo, std::ostream& err) {
  AfcParseResult parsed = parse_afc_file(path, topo);
  if (!parsed.rejected.empty()) {
    err << "warning: " << parsed.rejected.size() << " rows rejected from " << path << " (first: line "
        << parsed.rejected.front().line << ": " << parsed.rejected.front().reason << ")\n";
  }
  return std::move(parsed.records);
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path.string() + "'");
  return f;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.topology, "--topology");
  require_file(cfg.truth, "--truth");
  require_file(cfg.demand, "--demand");
  require_value(cfg.out, "--out");
  if (cfg.days < 1) throw UsageError("--days must be at least 1");

  const auto topo = NetworkTopology::from_file(cfg.topology);
  const WalkVariableIndex index(topo);
  const auto truth = ActionTimeModel::from_file(cfg.truth, index);
  const auto demand = DemandProfile::from_file(cfg.demand, topo);
  const RouteTable routes(topo);

  fs::create_directories(cfg.out);
  auto afc = open_output(fs::path(cfg.out) / "afc.csv");
  auto trace = open_output(fs::path(cfg.out) / "trace.csv");
  std::size_t total = 0;
  for (int d = cfg.first_day; d < cfg.first_day + cfg.days; ++d) {
    const SimulatedDay day = generate_day(topo, routes, truth, demand, d, cfg.seed);
    std::ostringstream a, t;
    write_afc_records(a, day.records, topo);
    write_trace_csv(t, day.trace, topo);
    std::string as = a.str(), ts = t.str();
    // One header per file.
    if (d != cfg.first_day) {
      as.erase(0, as.find('\n') + 1);
      ts.erase(0, ts.find('\n') + 1);
    }
    afc << as;
    trace << ts;
    total += day.records.size();
    out << "day " << d << ": " << day.records.size() << " trips\n";
  }
  out << "wrote " << total << " trips to " << (fs::path(cfg.out) / "afc.csv").string() << '\n';
  return 0;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.topology, "--topology");
  require_file(cfg.history, "--history");
  require_value(cfg.out, "--out");

  const auto topo = NetworkTopology::from_file(cfg.topology);
  const WalkVariableIndex index(topo);
  const auto records = load_records(cfg.history, topo, err);
  EstimatorOptions opts;
  opts.n_min = cfg.nmin;
  const EstimationResult result = estimate_action_times(topo, records, opts);

  auto f = open_output(cfg.out);
  f << result.model.to_json(&result.diagnostics) << '\n';

  const auto& d = result.diagnostics;
  out << "pairs used " << d.pairs_used << ", skipped " << d.pairs_skipped << '\n';
  out << "rms residual: mean " << d.mean_residual_rms << " s, variance " << d.variance_residual_rms << " s^2\n";
  out << "clipped means " << d.clipped_mean.size() << ", clipped variances " << d.clipped_variance.size()
      << ", unidentified " << d.unidentified.size() << '\n';

  if (!cfg.truth.empty()) {
    require_file(cfg.truth, "--truth");
    const auto truth = ActionTimeModel::from_file(cfg.truth, index);
    double se_mean = 0.0, se_var = 0.0;
    std::size_t n = 0;
    for (std::size_t l = 0; l < truth.size(); ++l) {
      if (!result.model.variables[l].identified) continue;
      se_mean += std::pow(result.model.variables[l].mean - truth.variables[l].mean, 2);
      se_var += std::pow(result.model.variables[l].variance - truth.variables[l].variance, 2);
      ++n;
    }
    if (n > 0) {
      out << "mse vs truth over " << n << " variables: mean " << se_mean / static_cast<double>(n) << " s^2, variance "
          << se_var / static_cast<double>(n) << " s^4\n";
    }
  }
  out << "model written to " << cfg.out << '\n';
  return 0;
}

int cmd_build_tables(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.topology, "--topology");
  require_file(cfg.history, "--history");
  require_value(cfg.archive, "--archive");
  if (!(cfg.delta > 0.0)) throw UsageError("--delta must be positive");
  if (cfg.imax == 0) throw UsageError("--imax must be positive");
  if (cfg.bin_width <= 0 || cfg.bin_width > kSecondsPerDay) throw UsageError("--bin-width must be in (0, 86400]");

  const auto topo = NetworkTopology::from_file(cfg.topology);
  const WalkVariableIndex index(topo);
  const auto records = load_records(cfg.history, topo, err);

  OperationalDatabase db;
  if (!cfg.model.empty()) {
    require_file(cfg.model, "--model");
    db.model = ActionTimeModel::from_file(cfg.model, index);
  } else {
    EstimatorOptions opts;
    opts.n_min = cfg.nmin;
    db.model = estimate_action_times(topo, records, opts).model;
  }
  db.parameters = {cfg.delta, cfg.horizon, cfg.imax, cfg.bin_width, cfg.seed};
  // Derived from the data so rebuilding the same inputs gives the same bytes.
  for (const auto& r : records) db.built_at = std::max(db.built_at, r.exit_time.value_or(r.entry_time));

  const RouteTable routes(topo);
  LocationTableOptions opts;
  opts.samples = cfg.imax;
  opts.step = cfg.delta;
  opts.horizon = cfg.horizon;
  opts.seed = cfg.seed;
  db.tables = build_location_tables(routes, topo, db.model, opts);
  db.destinations = build_destination_table(records, topo.station_count(), cfg.bin_width);

  const ArchiveSummary s = save_archive(cfg.archive, topo, db);
  char fp[24];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(s.fingerprint));
  out << "archive " << cfg.archive << ": " << s.location_tables << " location tables, " << s.destination_records
      << " destination records, " << s.bytes << " bytes, topology " << fp << '\n';
  if (s.destination_empty) out << "warning: no history records; destinations fall back to uniform\n";
  return 0;
}

void render_outputs(const NetworkTopology& topo, const SnapshotSeries& series, const RunConfig& cfg,
                    const fs::path& dir, std::ostream& out, std::ostream& err) {
  const std::string mode = cfg.render.empty() ? "both" : cfg.render;
  const bool want_svg = mode == "svg" || mode == "both";
  const bool want_csv = mode == "csv" || mode == "both";
  fs::create_directories(dir);

  const bool has_layout = std::all_of(topo.stations().begin(), topo.stations().end(),
                                      [](const Station& s) { return s.has_position(); });
  if (want_svg && !has_layout) {
    if (!want_csv) throw ValidationError("topology has no layout coordinates; cannot render svg");
    err << "warning: topology has no layout coordinates; writing csv only\n";
  }
  if (want_csv || !has_layout) {
    auto f = open_output(dir / "timeseries.csv");
    write_time_series_csv(f, series);
    out << "wrote " << (dir / "timeseries.csv").string() << '\n';
  }
  if (want_svg && has_layout) {
    const ColorEdges edges = color_bin_edges(series);
    for (std::size_t t = 0; t < series.times.size(); ++t) {
      const Timestamp tod = ((series.times[t] % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
      char name[64];
      std::snprintf(name, sizeof name, "snapshot_%04zu_%02d%02d.svg", t, static_cast<int>(tod / 3600),
                    static_cast<int>((tod % 3600) / 60));
      auto f = open_output(dir / name);
      f << render_svg(topo, series, t, edges);
    }
    out << "wrote " << series.times.size() << " svg files to " << dir.string() << '\n';
  }
}

Timestamp resolve_time(const std::string& text, Timestamp day_start) {
  if (text.find(':') == std::string::npos) return parse_clock_arg(text);
  return day_start + parse_clock_arg(text);
}

int cmd_infer(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.topology, "--topology");
  require_file(cfg.archive, "--archive");
  require_file(cfg.events, "--events");
  if (cfg.cadence <= 0) throw UsageError("--cadence must be positive");
  if (!cfg.render.empty() && cfg.out.empty()) throw UsageError("--render needs --out <directory>");

  const auto topo = NetworkTopology::from_file(cfg.topology);
  OperationalDatabase db = load_archive(cfg.archive, topo);
  const InferenceTables tables(topo, std::move(db.tables), std::move(db.destinations));
  const auto records = load_records(cfg.events, topo, err);
  const auto events = events_from_records(records);

  const Timestamp day_start =
      events.empty() ? 0 : (events.front().time - ((events.front().time % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay);
  const Timestamp from = resolve_time(cfg.from, day_start);
  const Timestamp to = resolve_time(cfg.to, day_start);
  if (to < from) throw UsageError("--to is before --from");

  std::ostringstream stream;
  bool header = true;
  std::size_t count = 0;
  replay(events, tables, from, to, cfg.cadence, [&](const CrowdednessSnapshot& snap) {
    write_snapshot_csv(stream, snap, topo, cfg.fold_transfers, true, header);
    header = false;
    ++count;
  });

  if (cfg.render.empty()) {
    if (cfg.out.empty() || cfg.out == "-") {
      out << stream.str();
    } else {
      auto f = open_output(cfg.out);
      f << stream.str();
      err << count << " snapshots written to " << cfg.out << '\n';
    }
    return 0;
  }
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "snapshots.csv");
    f << stream.str();
  }
  std::istringstream in(stream.str());
  render_outputs(topo, read_snapshot_stream(in), cfg, dir, out, err);
  out << count << " snapshots\n";
  return 0;
}

int cmd_render(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.topology, "--topology");
  require_file(cfg.snapshots, "--snapshots");
  require_value(cfg.out, "--out");
  const auto topo = NetworkTopology::from_file(cfg.topology);
  std::ifstream in(cfg.snapshots);
  const SnapshotSeries series = read_snapshot_stream(in);
  render_outputs(topo, series, cfg, cfg.out, out, err);
  return 0;
}

}  // namespace

long long parse_clock_arg(const std::string& text) {
  int h = 0, m = 0, s = 0;
  char tail = 0;
  if (text.find(':') == std::string::npos) {
    long long v = 0;
    if (std::sscanf(text.c_str(), "%lld%c", &v, &tail) != 1) throw UsageError("bad time '" + text + "'");
    return v;
  }
  const int got = std::sscanf(text.c_str(), "%d:%d:%d%c", &h, &m, &s, &tail);
  if (got < 2 || got > 3 || h < 0 || m < 0 || m > 59 || s < 0 || s > 59) {
    throw UsageError("bad time '" + text + "' (expected HH:MM[:SS])");
  }
  return h * 3600LL + m * 60LL + s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Passenger crowdedness inference from tap-in/tap-out records", "railcrowd"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto topology = [&](CLI::App* sub) { sub->add_option("--topology", cfg.topology, "Network topology JSON"); };
  auto history = [&](CLI::App* sub) { sub->add_option("--history", cfg.history, "Historical AFC records CSV"); };

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic AFC corpus and its ground-truth trace");
  topology(sim);
  sim->add_option("--truth", cfg.truth, "Walk-time model used as ground truth");
  sim->add_option("--demand", cfg.demand, "Demand profile JSON");
  sim->add_option("--days", cfg.days, "Number of days")->capture_default_str();
  sim->add_option("--first-day", cfg.first_day, "Index of the first simulated day")->capture_default_str();
  sim->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  sim->add_option("--out", cfg.out, "Output directory (afc.csv, trace.csv)");

  auto* est = app.add_subcommand("estimate", "Estimate walk-time distributions from history");
  topology(est);
  history(est);
  est->add_option("--nmin", cfg.nmin, "Minimum records per OD pair")->capture_default_str();
  est->add_option("--truth", cfg.truth, "Optional true model for an error report");
  est->add_option("--out", cfg.out, "Model JSON output");

  auto* build = app.add_subcommand("build-tables", "Build location and destination tables into an archive");
  topology(build);
  history(build);
  build->add_option("--model", cfg.model, "Walk-time model JSON (estimated from history if absent)");
  build->add_option("--archive", cfg.archive, "Archive output path");
  build->add_option("--delta", cfg.delta, "Grid step in seconds")->capture_default_str();
  build->add_option("--horizon", cfg.horizon, "Grid steps per table, 0 sizes per route")->capture_default_str();
  build->add_option("--imax", cfg.imax, "Simulated trips per route")->capture_default_str();
  build->add_option("--bin-width", cfg.bin_width, "Time-of-day bin width in seconds")->capture_default_str();
  build->add_option("--nmin", cfg.nmin, "Minimum records per OD pair")->capture_default_str();
  build->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();

  auto* infer = app.add_subcommand("infer", "Replay tap events and emit crowdedness snapshots");
  topology(infer);
  infer->add_option("--archive", cfg.archive, "Archive built by build-tables");
  infer->add_option("--events", cfg.events, "Tap events as AFC records CSV");
  infer->add_option("--from", cfg.from, "First snapshot, HH:MM on the events' day or seconds")->capture_default_str();
  infer->add_option("--to", cfg.to, "Last snapshot, HH:MM on the events' day or seconds")->capture_default_str();
  infer->add_option("--cadence", cfg.cadence, "Seconds between snapshots")->capture_default_str();
  infer->add_flag("--fold-transfers", cfg.fold_transfers, "Add transfer points to their station totals");
  infer->add_option("--render", cfg.render, "Also render into --out: svg, csv or both")
      ->check(CLI::IsMember({"svg", "csv", "both"}));
  infer->add_option("--out", cfg.out, "Snapshot CSV (stdout if absent), or a directory with --render");

  auto* render = app.add_subcommand("render", "Render a snapshot stream as SVG maps and a CSV time series");
  topology(render);
  render->add_option("--snapshots", cfg.snapshots, "Snapshot stream written by infer");
  render->add_option("--render", cfg.render, "svg, csv or both")->check(CLI::IsMember({"svg", "csv", "both"}));
  render->add_option("--out", cfg.out, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    if (sim->parsed()) return cmd_simulate(cfg, out);
    if (est->parsed()) return cmd_estimate(cfg, out, err);
    if (build->parsed()) return cmd_build_tables(cfg, out, err);
    if (infer->parsed()) return cmd_infer(cfg, out, err);
    if (render->parsed()) return cmd_render(cfg, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::data);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::data);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::data);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::internal);
  }
  return static_cast<int>(ExitCode::usage);
}

}  // namespace railcrowd
