#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "railcrowd/ingest.hpp"
#include "railcrowd/network.hpp"

namespace railcrowd {

/// Travel-time moments of one route as a linear function of the walk-time
/// moments: mean = c_mean + r . mu_x, variance = c_var + r . s_x.
struct MomentRow {
  OdPair pair;
  double c_mean = 0.0;  // seconds
  double c_var = 0.0;   // seconds^2
  std::vector<int> r;   // occurrences of each walk variable on the route
};

struct MomentSystem {
  std::size_t variable_count = 0;
  std::vector<MomentRow> rows;
};

MomentSystem build_moment_system(const NetworkTopology& topology, const RouteTable& routes,
                                 const WalkVariableIndex& index);

struct EstimatorOptions {
  std::uint64_t n_min = 5;
  double ridge = 1e-6;
  double mean_floor = 1.0;
  double variance_floor = 0.01;
  double weight_variance_floor = 1.0;  // stands in for zero sample variance in the mean weights
  double default_mean = kDefaultWalkMean;
  double default_variance = 5.0;
};

struct WalkTimeEstimates {
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<bool> identified;  // false: no retained pair touches the variable
};

struct WlsDiagnostics {
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;  // fewer than n_min records
  double mean_residual_rms = 0.0;
  double variance_residual_rms = 0.0;
  double mean_objective = 0.0;
  double variance_objective = 0.0;
  std::vector<std::size_t> clipped_mean;
  std::vector<std::size_t> clipped_variance;
  std::vector<std::size_t> unidentified;
};

struct WlsResult {
  WalkTimeEstimates estimates;
  WlsDiagnostics diagnostics;
};

/// Solves both weighted least-squares problems:
///   mean:     min sum N/var_hat * (mu_hat - c_mean - r.mu_x)^2
///   variance: min sum N * (var_hat - c_var - r.s_x)^2
/// via ridge-regularized normal equations restricted to variables touched by
/// retained pairs. Results below the floors are clipped and reported.
WlsResult solve_wls(const MomentSystem& system, const OdTravelStats& stats, const EstimatorOptions& options = {});

/// Weighted mean objective at `mu_x` over the pairs retained by `options`.
double wls_mean_objective(const MomentSystem& system, const OdTravelStats& stats, std::span<const double> mu_x,
                          const EstimatorOptions& options = {});
double wls_variance_objective(const MomentSystem& system, const OdTravelStats& stats, std::span<const double> s_x,
                              const EstimatorOptions& options = {});

struct GammaParams {
  double shape = 1.0;  // dimensionless
  double scale = 1.0;  // seconds

  double mean() const { return shape * scale; }
  double variance() const { return shape * scale * scale; }
};

/// Moment inversion: scale = variance/mean, shape = mean^2/variance.
GammaParams gamma_from_moments(double mean, double variance);

struct WalkVariableModel {
  std::string name;
  double mean = 0.0;
  double variance = 0.0;
  GammaParams gamma;
  bool identified = true;
};

/// Walk-time distributions for every walk variable. Headways and segment
/// times stay in the topology.
struct ActionTimeModel {
  std::vector<WalkVariableModel> variables;

  std::size_t size() const { return variables.size(); }
  std::vector<double> means() const;
  std::vector<double> variances() const;

  /// Model with the given moments for every variable of `index`.
  static ActionTimeModel from_moments(const WalkVariableIndex& index, std::span<const double> mean,
                                      std::span<const double> variance);

  std::string to_json(const WlsDiagnostics* diagnostics = nullptr) const;
  /// Reads a model document; variables are matched to `index` by name and all
  /// must be present.
  static ActionTimeModel from_json(std::string_view text, const WalkVariableIndex& index);
  static ActionTimeModel from_file(const std::string& path, const WalkVariableIndex& index);
};

struct EstimationResult {
  ActionTimeModel model;
  WlsDiagnostics diagnostics;
};

/// Full offline estimation: OD stats, moment system over default-mean routes,
/// both WLS solves, Gamma inversion.
EstimationResult estimate_action_times(const NetworkTopology& topology, std::span<const AfcRecord> records,
                                       const EstimatorOptions& options = {});

}  // namespace railcrowd
