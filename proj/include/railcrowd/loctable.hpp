#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "railcrowd/estimator.hpp"
#include "railcrowd/network.hpp"

namespace railcrowd {

/// Random source for all Monte Carlo work. Gamma draws use
/// std::gamma_distribution (Marsaglia-Tsang in libstdc++), uniform waits use
/// std::uniform_real_distribution; streams are reproducible per build.
using Rng = std::mt19937_64;

/// Seed for an OD-specific stream, mixed with std::seed_seq.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

enum class SamplingMode : std::uint8_t {
  random,     // Gamma walk plus Uniform(0, headway) wait
  mean_path,  // every duration at its mean (walk mean, headway/2)
};

/// Duration of one action in seconds.
///   enter:    Gamma(platform walk) + Uniform(0, headway of the line)
///   move:     segment travel time
///   transfer: Gamma(transfer walk) + Uniform(0, headway of the next line)
///   exit:     Gamma(platform walk)
double sample_action_time(const Action& action, const NetworkTopology& topology, const WalkVariableIndex& index,
                          const ActionTimeModel& model, Rng& rng, SamplingMode mode = SamplingMode::random);

struct LocationTableOptions {
  std::uint64_t samples = 20000;  // trips simulated per route
  double step = 15.0;             // grid step in seconds
  std::size_t horizon = 0;        // grid steps; 0 sizes it from the route's moments
  std::uint64_t seed = 1;
  SamplingMode mode = SamplingMode::random;
};

inline constexpr double kMaxHorizonSeconds = 3 * 3600.0;

/// Grid steps needed so step*R covers mean + 6 sd of the route duration,
/// capped at three hours.
std::size_t auto_horizon(const NetworkTopology& topology, const Route& route, const ActionTimeModel& model,
                         double step);

/// Monte Carlo table of where a passenger on one route is after r grid steps.
/// counts has (m+1) rows (last row: exited) and R columns; probabilities are
/// conditional on still being in the network.
class LocationTable {
 public:
  LocationTable() = default;
  LocationTable(Route route, double step, std::size_t horizon, std::uint64_t samples,
                std::vector<std::uint32_t> counts);

  const Route& route() const { return route_; }
  std::size_t action_count() const { return route_.actions.size(); }
  double step() const { return step_; }
  std::size_t horizon() const { return horizon_; }
  std::uint64_t samples() const { return samples_; }

  /// A_{c,r} for action row c in [0, m] (m = exited) and step r in [1, R].
  std::uint32_t count(std::size_t c, std::size_t r) const { return counts_[(r - 1) * (action_count() + 1) + c]; }
  std::uint64_t in_network(std::size_t r) const;
  /// P(action c | in network, r*step); columns without survivors hold a point
  /// mass on the final action.
  double probability(std::size_t c, std::size_t r) const { return probs_[(r - 1) * action_count() + c]; }
  std::span<const double> column(std::size_t r) const {
    return {probs_.data() + (r - 1) * action_count(), action_count()};
  }

  /// Grid column used for elapsed time `elapsed`: round(elapsed/step)
  /// clamped to [1, R].
  std::size_t column_for(double elapsed) const;
  /// Probability over the route's actions after `elapsed` seconds.
  std::span<const double> location_distribution(double elapsed) const { return column(column_for(elapsed)); }

  std::span<const std::uint32_t> raw_counts() const { return counts_; }
  std::span<const double> raw_probabilities() const { return probs_; }

 private:
  Route route_;
  double step_ = 0.0;
  std::size_t horizon_ = 0;
  std::uint64_t samples_ = 0;
  std::vector<std::uint32_t> counts_;  // column-major, (m+1) per column
  std::vector<double> probs_;          // column-major, m per column
};

LocationTable build_location_table(const Route& route, const NetworkTopology& topology, const ActionTimeModel& model,
                                   const LocationTableOptions& options);

/// Tables for every route in `routes`, each with seed derive_seed(seed, s, s').
std::vector<LocationTable> build_location_tables(const RouteTable& routes, const NetworkTopology& topology,
                                                 const ActionTimeModel& model, const LocationTableOptions& options);

}  // namespace railcrowd
