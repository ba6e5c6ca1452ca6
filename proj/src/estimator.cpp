#include "railcrowd/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace railcrowd {

MomentSystem build_moment_system(const NetworkTopology& topology, const RouteTable& routes,
                                 const WalkVariableIndex& index) {
  MomentSystem system;
  system.variable_count = index.size();
  system.rows.reserve(routes.size());
  for (const Route& route : routes.routes()) {
    MomentRow row;
    row.pair = {route.from, route.to};
    row.r.assign(index.size(), 0);
    for (const Action& a : route.actions) {
      switch (a.kind) {
        case ActionKind::enter: {
          const double h = topology.line(topology.platform(make_id<PlatformId>(a.ref)).line).headway;
          row.c_mean += h / 2.0;
          row.c_var += h * h / 12.0;
          break;
        }
        case ActionKind::move:
          row.c_mean += topology.segment(make_id<SegmentId>(a.ref)).travel_time;
          break;
        case ActionKind::transfer: {
          const double h = topology.line(topology.transfer(make_id<TransferId>(a.ref)).to).headway;
          row.c_mean += h / 2.0;
          row.c_var += h * h / 12.0;
          break;
        }
        case ActionKind::exit:
          break;
      }
      if (auto l = index.of_action(a)) {
        if (*l >= index.size()) throw DataError("action '" + topology.describe(a) + "' has no walk variable");
        row.r[*l] += 1;
      }
    }
    system.rows.push_back(std::move(row));
  }
  return system;
}

namespace {

struct Retained {
  const MomentRow* row;
  OdMoments moments;
};

std::vector<Retained> retained_rows(const MomentSystem& system, const OdTravelStats& stats,
                                    const EstimatorOptions& options, std::size_t* skipped = nullptr) {
  std::vector<Retained> out;
  std::size_t skip = 0;
  for (const MomentRow& row : system.rows) {
    auto it = stats.find(row.pair);
    if (it == stats.end()) continue;
    if (it->second.count < options.n_min) {
      ++skip;
      continue;
    }
    out.push_back({&row, it->second});
  }
  if (skipped) *skipped = skip;
  return out;
}

double mean_weight(const OdMoments& m, const EstimatorOptions& options) {
  return static_cast<double>(m.count) / std::max(m.variance, options.weight_variance_floor);
}

double dot(const std::vector<int>& r, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t l = 0; l < r.size(); ++l) {
    if (r[l] != 0) s += r[l] * x[l];
  }
  return s;
}

// Solves min sum w_k (y_k - a_k . x)^2 over the given columns.
Eigen::VectorXd weighted_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                               double ridge, const char* what) {
  const Eigen::MatrixXd normal = a.transpose() * w.asDiagonal() * a;
  const Eigen::VectorXd rhs = a.transpose() * w.asDiagonal() * y;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (!(max_ev > 0.0) || min_ev <= 1e-10 * max_ev) {
    throw DataError(std::string("walk-time ") + what +
                    " system is rank deficient: some walk variables always occur together on retained routes");
  }
  Eigen::MatrixXd regularized = normal;
  regularized.diagonal().array() += ridge;
  const auto ldlt = regularized.ldlt();
  Eigen::VectorXd x = ldlt.solve(rhs);
  // Refine against the unregularized equations so the ridge does not bias x.
  const double scale = std::max(rhs.norm(), 1e-300);
  for (int iter = 0; iter < 50; ++iter) {
    const Eigen::VectorXd residual = rhs - normal * x;
    if (residual.norm() <= 1e-14 * scale) break;
    x += ldlt.solve(residual);
  }
  return x;
}

}  // namespace

double wls_mean_objective(const MomentSystem& system, const OdTravelStats& stats, std::span<const double> mu_x,
                          const EstimatorOptions& options) {
  double obj = 0.0;
  for (const Retained& k : retained_rows(system, stats, options)) {
    const double e = k.moments.mean - k.row->c_mean - dot(k.row->r, mu_x);
    obj += mean_weight(k.moments, options) * e * e;
  }
  return obj;
}

double wls_variance_objective(const MomentSystem& system, const OdTravelStats& stats, std::span<const double> s_x,
                              const EstimatorOptions& options) {
  double obj = 0.0;
  for (const Retained& k : retained_rows(system, stats, options)) {
    const double e = k.moments.variance - k.row->c_var - dot(k.row->r, s_x);
    obj += static_cast<double>(k.moments.count) * e * e;
  }
  return obj;
}

WlsResult solve_wls(const MomentSystem& system, const OdTravelStats& stats, const EstimatorOptions& options) {
  const std::size_t n = system.variable_count;
  WlsResult result;
  auto& diag = result.diagnostics;
  auto rows = retained_rows(system, stats, options, &diag.pairs_skipped);
  diag.pairs_used = rows.size();
  if (rows.empty()) {
    throw DataError("no usable pairs: no OD pair has at least " + std::to_string(options.n_min) + " records");
  }

  std::vector<std::size_t> columns;
  std::vector<std::ptrdiff_t> column_of(n, -1);
  for (std::size_t l = 0; l < n; ++l) {
    const bool touched = std::any_of(rows.begin(), rows.end(), [&](const Retained& k) { return k.row->r[l] != 0; });
    if (touched) {
      column_of[l] = static_cast<std::ptrdiff_t>(columns.size());
      columns.push_back(l);
    } else {
      diag.unidentified.push_back(l);
    }
  }

  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto q = static_cast<Eigen::Index>(columns.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, q);
  Eigen::VectorXd w_mean(m), w_var(m), y_mean(m), y_var(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Retained& row = rows[static_cast<std::size_t>(k)];
    for (std::size_t l = 0; l < n; ++l) {
      if (row.row->r[l] != 0) a(k, column_of[l]) = row.row->r[l];
    }
    w_mean(k) = mean_weight(row.moments, options);
    w_var(k) = static_cast<double>(row.moments.count);
    y_mean(k) = row.moments.mean - row.row->c_mean;
    y_var(k) = row.moments.variance - row.row->c_var;
  }

  const Eigen::VectorXd mu = weighted_solve(a, w_mean, y_mean, options.ridge, "mean");
  const Eigen::VectorXd sv = weighted_solve(a, w_var, y_var, options.ridge, "variance");

  const Eigen::VectorXd r_mean = y_mean - a * mu;
  const Eigen::VectorXd r_var = y_var - a * sv;
  diag.mean_residual_rms = std::sqrt(r_mean.squaredNorm() / static_cast<double>(m));
  diag.variance_residual_rms = std::sqrt(r_var.squaredNorm() / static_cast<double>(m));
  diag.mean_objective = (w_mean.array() * r_mean.array().square()).sum();
  diag.variance_objective = (w_var.array() * r_var.array().square()).sum();

  auto& est = result.estimates;
  est.mean.assign(n, options.default_mean);
  est.variance.assign(n, options.default_variance);
  est.identified.assign(n, false);
  for (Eigen::Index c = 0; c < q; ++c) {
    const std::size_t l = columns[static_cast<std::size_t>(c)];
    est.identified[l] = true;
    est.mean[l] = mu(c);
    est.variance[l] = sv(c);
    if (!(est.mean[l] >= options.mean_floor)) {
      est.mean[l] = options.mean_floor;
      diag.clipped_mean.push_back(l);
    }
    if (!(est.variance[l] >= options.variance_floor)) {
      est.variance[l] = options.variance_floor;
      diag.clipped_variance.push_back(l);
    }
  }
  return result;
}

GammaParams gamma_from_moments(double mean, double variance) {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("gamma_from_moments: mean must be positive, got " + std::to_string(mean));
  }
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("gamma_from_moments: variance must be positive, got " + std::to_string(variance));
  }
  return {mean * mean / variance, variance / mean};
}

std::vector<double> ActionTimeModel::means() const {
  std::vector<double> out;
  out.reserve(variables.size());
  for (const auto& v : variables) out.push_back(v.mean);
  return out;
}

std::vector<double> ActionTimeModel::variances() const {
  std::vector<double> out;
  out.reserve(variables.size());
  for (const auto& v : variables) out.push_back(v.variance);
  return out;
}

ActionTimeModel ActionTimeModel::from_moments(const WalkVariableIndex& index, std::span<const double> mean,
                                              std::span<const double> variance) {
  if (mean.size() != index.size() || variance.size() != index.size()) {
    throw std::invalid_argument("ActionTimeModel: moment vectors do not match the walk-variable index");
  }
  ActionTimeModel model;
  for (std::size_t l = 0; l < index.size(); ++l) {
    model.variables.push_back({index[l].name, mean[l], variance[l], gamma_from_moments(mean[l], variance[l]), true});
  }
  return model;
}

std::string ActionTimeModel::to_json(const WlsDiagnostics* diagnostics) const {
  using json = nlohmann::json;
  json doc;
  doc["variables"] = json::array();
  for (const auto& v : variables) {
    doc["variables"].push_back({{"id", v.name},
                                {"mean", v.mean},
                                {"variance", v.variance},
                                {"shape", v.gamma.shape},
                                {"scale", v.gamma.scale},
                                {"identified", v.identified}});
  }
  if (diagnostics) {
    auto names = [&](const std::vector<std::size_t>& ls) {
      json arr = json::array();
      for (auto l : ls) arr.push_back(variables.at(l).name);
      return arr;
    };
    doc["diagnostics"] = {{"pairs_used", diagnostics->pairs_used},
                          {"pairs_skipped", diagnostics->pairs_skipped},
                          {"mean_residual_rms", diagnostics->mean_residual_rms},
                          {"variance_residual_rms", diagnostics->variance_residual_rms},
                          {"mean_objective", diagnostics->mean_objective},
                          {"variance_objective", diagnostics->variance_objective},
                          {"clipped_mean", names(diagnostics->clipped_mean)},
                          {"clipped_variance", names(diagnostics->clipped_variance)},
                          {"unidentified", names(diagnostics->unidentified)}};
  }
  return doc.dump(2);
}

ActionTimeModel ActionTimeModel::from_json(std::string_view text, const WalkVariableIndex& index) {
  using json = nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("variables") || !doc["variables"].is_array()) {
    throw ParseError("model: expected an object with a 'variables' array");
  }
  std::vector<const json*> by_index(index.size(), nullptr);
  for (const json& v : doc["variables"]) {
    if (!v.is_object() || !v.contains("id") || !v["id"].is_string()) throw ParseError("model: variable without 'id'");
    auto l = index.find(v["id"].get<std::string>());
    if (!l) throw ValidationError("model: unknown walk variable '" + v["id"].get<std::string>() + "'");
    by_index[*l] = &v;
  }
  ActionTimeModel model;
  for (std::size_t l = 0; l < index.size(); ++l) {
    if (!by_index[l]) throw ValidationError("model: missing walk variable '" + index[l].name + "'");
    const json& v = *by_index[l];
    if (!v.contains("mean") || !v["mean"].is_number() || !v.contains("variance") || !v["variance"].is_number()) {
      throw ParseError("model: variable '" + index[l].name + "' needs numeric 'mean' and 'variance'");
    }
    const double mean = v["mean"].get<double>();
    const double var = v["variance"].get<double>();
    model.variables.push_back({index[l].name, mean, var, gamma_from_moments(mean, var), v.value("identified", true)});
  }
  return model;
}

ActionTimeModel ActionTimeModel::from_file(const std::string& path, const WalkVariableIndex& index) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), index);
}

EstimationResult estimate_action_times(const NetworkTopology& topology, std::span<const AfcRecord> records,
                                       const EstimatorOptions& options) {
  const OdTravelStats stats = build_od_stats(records);
  if (stats.empty()) throw DataError("no complete AFC records to estimate from");
  const WalkVariableIndex index(topology);
  const RouteTable routes(topology, {}, options.default_mean);
  const MomentSystem system = build_moment_system(topology, routes, index);
  WlsResult wls = solve_wls(system, stats, options);

  EstimationResult result;
  for (std::size_t l = 0; l < index.size(); ++l) {
    const double mean = wls.estimates.mean[l];
    const double var = wls.estimates.variance[l];
    result.model.variables.push_back(
        {index[l].name, mean, var, gamma_from_moments(mean, var), static_cast<bool>(wls.estimates.identified[l])});
  }
  result.diagnostics = std::move(wls.diagnostics);
  return result;
}

}  // namespace railcrowd
