#pragma once

#include <array>

namespace oracle {

/// Exact occupancy of a route Enter -> Move -> Exit where
///   enter = Gamma(enter_shape, enter_scale) + Uniform(0, headway)
///   move  = move_time
///   exit  = Gamma(exit_shape, exit_scale)
/// computed with the gamma CDF and numeric quadrature, independent of any
/// sampling code.
struct ThreeActionRoute {
  double enter_shape;
  double enter_scale;
  double headway;
  double move_time;
  double exit_shape;
  double exit_scale;

  /// CDF of the enter duration.
  double enter_cdf(double t) const;
  /// CDF of the whole trip duration.
  double trip_cdf(double t) const;
  /// P(enter), P(move), P(exit), P(exited) at elapsed time t, using the
  /// convention that an action ending exactly at t still holds the trip.
  std::array<double, 4> occupancy(double t) const;
  /// Occupancy conditional on still being in the network.
  std::array<double, 3> conditional(double t) const;
};

}  // namespace oracle
