#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "railcrowd/estimator.hpp"
#include "railcrowd/loctable.hpp"
#include "railcrowd/simgen.hpp"
#include "test_support.hpp"

using namespace railcrowd;
using testing::HasSubstr;

namespace {

StationId sid(const NetworkTopology& t, const std::string& code) { return *t.find_station(code); }

const MomentRow& row_for(const MomentSystem& sys, StationId a, StationId b) {
  for (const auto& row : sys.rows) {
    if (row.pair.from == a && row.pair.to == b) return row;
  }
  throw std::logic_error("no row");
}

double dot(const std::vector<int>& r, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t l = 0; l < r.size(); ++l) s += r[l] * x[l];
  return s;
}

// Noise-free stats: every pair's moments are exactly the linear model.
OdTravelStats exact_stats(const MomentSystem& sys, const std::vector<double>& mu, const std::vector<double>& s,
                          std::mt19937_64& rng) {
  OdTravelStats stats;
  for (const auto& row : sys.rows) {
    stats[row.pair] = {5 + rng() % 400, row.c_mean + dot(row.r, mu), row.c_var + dot(row.r, s)};
  }
  return stats;
}

}  // namespace

TEST(MomentSystem, NoTransferRouteConstants) {
  const auto t = NetworkTopology::from_json(R"({
    "stations": ["A","B","C"],
    "lines": [{"id":"L","stations":["A","B","C"],"headway":120}],
    "segments": [{"from":"A","to":"B","time":90},{"from":"B","to":"C","time":90}]})");
  const WalkVariableIndex index(t);
  const auto sys = build_moment_system(t, RouteTable(t), index);
  const auto& row = row_for(sys, sid(t, "A"), sid(t, "C"));
  EXPECT_DOUBLE_EQ(row.c_mean, 240.0);
  EXPECT_DOUBLE_EQ(row.c_var, 1200.0);
  std::vector<int> expect(index.size(), 0);
  expect[*index.find("L:A")] = 1;
  expect[*index.find("L:C")] = 1;
  EXPECT_EQ(row.r, expect);
}

TEST(MomentSystem, SixStationTransferRouteHasThreeUnitEntries) {
  const auto t = testsupport::six_station();
  const WalkVariableIndex index(t);
  const auto sys = build_moment_system(t, RouteTable(t), index);
  const auto& row = row_for(sys, sid(t, "A"), sid(t, "F"));
  std::vector<std::size_t> ones;
  for (std::size_t l = 0; l < row.r.size(); ++l) {
    EXPECT_TRUE(row.r[l] == 0 || row.r[l] == 1);
    if (row.r[l] == 1) ones.push_back(l);
  }
  EXPECT_THAT(ones, testing::UnorderedElementsAre(*index.find("purple:A"), *index.find("E:purple>blue"),
                                                  *index.find("blue:F")));
  // headway halves 90 + 120, segments 120 + 90 + 150 + 100 + 130
  EXPECT_DOUBLE_EQ(row.c_mean, 90.0 + 120.0 + 590.0);
  EXPECT_DOUBLE_EQ(row.c_var, 180.0 * 180.0 / 12.0 + 240.0 * 240.0 / 12.0);
}

TEST(MomentSystemProperty, CoefficientMassIsTwoPlusTransfers) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = testsupport::random_topology(rng);
    const RouteTable routes(t);
    const auto sys = build_moment_system(t, routes, WalkVariableIndex(t));
    ASSERT_EQ(sys.rows.size(), routes.size());
    for (std::size_t k = 0; k < sys.rows.size(); ++k) {
      int mass = 0;
      for (int v : sys.rows[k].r) {
        EXPECT_GE(v, 0);
        mass += v;
      }
      EXPECT_EQ(mass, 2 + static_cast<int>(routes.routes()[k].transfers().size()));
    }
  }
}

TEST(MomentSystemProperty, SampledRouteMomentsMatchLinearModel) {
  const auto t = testsupport::two_line();
  const WalkVariableIndex index(t);
  const auto truth = ActionTimeModel::from_file(testsupport::data_path("two_line_31_truth.json"), index);
  const RouteTable routes(t);
  const auto sys = build_moment_system(t, routes, index);
  const auto mu = truth.means();
  const auto s = truth.variances();
  Rng rng(17);
  const int draws = 40000;
  for (const char* od : {"SHW-TST", "KET-CHW", "TSW-HFC", "CEN-ADM"}) {
    const std::string name(od);
    const auto a = sid(t, name.substr(0, 3));
    const auto b = sid(t, name.substr(4, 3));
    const Route& route = routes.at(a, b);
    MomentAccumulator acc;
    for (int i = 0; i < draws; ++i) {
      double total = 0.0;
      for (const Action& act : route.actions) total += sample_action_time(act, t, index, truth, rng);
      acc.add(total);
    }
    const auto m = acc.moments();
    const auto& row = row_for(sys, a, b);
    const double mean = row.c_mean + dot(row.r, mu);
    const double var = row.c_var + dot(row.r, s);
    EXPECT_NEAR(m.mean, mean, 3.0 * std::sqrt(var / draws)) << od;
    // sd of the sample variance is below sqrt(2/N) * var for these platykurtic sums
    EXPECT_NEAR(m.variance, var, 3.0 * std::sqrt(2.0 / draws) * var) << od;
  }
}

TEST(Wls, SinglePairSingleVariable) {
  MomentSystem sys;
  sys.variable_count = 1;
  sys.rows.push_back({{make_id<StationId>(0), make_id<StationId>(1)}, 240.0, 1200.0, {1}});
  OdTravelStats stats;
  stats[{make_id<StationId>(0), make_id<StationId>(1)}] = {10, 300.0, 1205.0};
  const auto res = solve_wls(sys, stats);
  EXPECT_NEAR(res.estimates.mean[0], 60.0, 1e-8);
  EXPECT_NEAR(res.estimates.variance[0], 5.0, 1e-8);
  EXPECT_TRUE(res.diagnostics.clipped_mean.empty());
  EXPECT_EQ(res.diagnostics.pairs_used, 1u);
}

TEST(Wls, ExactSystemIsRecovered) {
  const auto t = testsupport::two_line();
  const WalkVariableIndex index(t);
  const auto sys = build_moment_system(t, RouteTable(t), index);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> mean_d(40.0, 90.0), var_d(1.0, 20.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> mu(index.size()), s(index.size());
    for (auto& v : mu) v = mean_d(rng);
    for (auto& v : s) v = var_d(rng);
    const auto res = solve_wls(sys, exact_stats(sys, mu, s, rng));
    for (std::size_t l = 0; l < index.size(); ++l) {
      EXPECT_NEAR(res.estimates.mean[l], mu[l], 1e-8) << index[l].name;
      EXPECT_NEAR(res.estimates.variance[l], s[l], 1e-8) << index[l].name;
    }
    EXPECT_LT(res.diagnostics.mean_residual_rms, 1e-8);
  }
}

TEST(Wls, NMinAboveEveryCountMeansNoUsablePairs) {
  const auto t = testsupport::two_line();
  const WalkVariableIndex index(t);
  const auto sys = build_moment_system(t, RouteTable(t), index);
  std::mt19937_64 rng(1);
  const auto stats = exact_stats(sys, std::vector<double>(index.size(), 60.0), std::vector<double>(index.size(), 5.0), rng);
  EstimatorOptions opts;
  opts.n_min = 100000;
  try {
    solve_wls(sys, stats, opts);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_THAT(e.what(), HasSubstr("no usable pairs"));
  }
}

TEST(Wls, UnidentifiableNetworkIsRankDeficient) {
  // On the six-station network the walk at F always appears together with the
  // transfer walk or the blue platform at E.
  const auto t = testsupport::six_station();
  const WalkVariableIndex index(t);
  const auto sys = build_moment_system(t, RouteTable(t), index);
  std::mt19937_64 rng(2);
  const auto stats = exact_stats(sys, std::vector<double>(index.size(), 60.0), std::vector<double>(index.size(), 5.0), rng);
  try {
    solve_wls(sys, stats);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_THAT(e.what(), HasSubstr("rank deficient"));
  }
}

TEST(Wls, NegativeSolutionsAreClippedAndReported) {
  MomentSystem sys;
  sys.variable_count = 1;
  sys.rows.push_back({{make_id<StationId>(0), make_id<StationId>(1)}, 240.0, 1200.0, {1}});
  OdTravelStats stats;
  stats[{make_id<StationId>(0), make_id<StationId>(1)}] = {10, 200.0, 1000.0};
  const auto res = solve_wls(sys, stats);
  EXPECT_EQ(res.estimates.mean[0], 1.0);
  EXPECT_EQ(res.estimates.variance[0], 0.01);
  EXPECT_EQ(res.diagnostics.clipped_mean, std::vector<std::size_t>{0});
  EXPECT_EQ(res.diagnostics.clipped_variance, std::vector<std::size_t>{0});
}

TEST(WlsProperty, SolutionIsLocallyOptimalAndScalesLinearly) {
  const auto t = testsupport::two_line();
  const WalkVariableIndex index(t);
  const auto sys = build_moment_system(t, RouteTable(t), index);
  std::mt19937_64 rng(44);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    auto stats = exact_stats(sys, std::vector<double>(index.size(), 60.0), std::vector<double>(index.size(), 6.0), rng);
    for (auto& [pair, m] : stats) {
      m.mean += 2.0 * noise(rng);
      m.variance += 3.0 * noise(rng);
    }
    const auto res = solve_wls(sys, stats);
    ASSERT_TRUE(res.diagnostics.clipped_mean.empty());
    ASSERT_TRUE(res.diagnostics.clipped_variance.empty());
    const double f_mean = wls_mean_objective(sys, stats, res.estimates.mean);
    const double f_var = wls_variance_objective(sys, stats, res.estimates.variance);
    EXPECT_NEAR(f_mean, res.diagnostics.mean_objective, 1e-9 * f_mean);
    for (std::size_t l = 0; l < index.size(); ++l) {
      for (double h : {-1e-3, 1e-3}) {
        auto mu = res.estimates.mean;
        mu[l] += h;
        EXPECT_GE(wls_mean_objective(sys, stats, mu), f_mean * (1 - 1e-12));
        auto s = res.estimates.variance;
        s[l] += h;
        EXPECT_GE(wls_variance_objective(sys, stats, s), f_var * (1 - 1e-12));
      }
    }

    const double k = 1.7;
    auto scaled = stats;
    for (const auto& row : sys.rows) {
      auto& m = scaled.at(row.pair);
      m.mean = row.c_mean + k * (m.mean - row.c_mean);
    }
    const auto res_k = solve_wls(sys, scaled);
    for (std::size_t l = 0; l < index.size(); ++l) {
      EXPECT_NEAR(res_k.estimates.mean[l], k * res.estimates.mean[l], 1e-9 * k * res.estimates.mean[l]);
    }
  }
}

TEST(Gamma, Examples) {
  const auto g = gamma_from_moments(60.0, 5.0);
  EXPECT_DOUBLE_EQ(g.shape, 720.0);
  EXPECT_DOUBLE_EQ(g.scale, 1.0 / 12.0);
  const auto e = gamma_from_moments(10.0, 100.0);
  EXPECT_DOUBLE_EQ(e.shape, 1.0);
  EXPECT_DOUBLE_EQ(e.scale, 10.0);
  EXPECT_THROW(gamma_from_moments(60.0, 0.0), std::invalid_argument);
  EXPECT_THROW(gamma_from_moments(-1.0, 3.0), std::invalid_argument);
}

TEST(GammaProperty, InversionRoundTrips) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> logu(-3.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double mean = std::pow(10.0, logu(rng));
    const double var = std::pow(10.0, logu(rng));
    const auto g = gamma_from_moments(mean, var);
    EXPECT_NEAR(g.mean(), mean, 1e-12 * mean);
    EXPECT_NEAR(g.variance(), var, 1e-12 * var);
  }
}

TEST(Model, JsonRoundTripAndValidation) {
  const auto t = testsupport::six_station();
  const WalkVariableIndex index(t);
  std::vector<double> mu, s;
  for (std::size_t l = 0; l < index.size(); ++l) {
    mu.push_back(40.0 + 3.1 * l);
    s.push_back(5.0 + 0.37 * l);
  }
  auto model = ActionTimeModel::from_moments(index, mu, s);
  model.variables[2].identified = false;
  const auto back = ActionTimeModel::from_json(model.to_json(), index);
  ASSERT_EQ(back.size(), index.size());
  for (std::size_t l = 0; l < index.size(); ++l) {
    EXPECT_EQ(back.variables[l].name, index[l].name);
    EXPECT_EQ(back.variables[l].mean, mu[l]);
    EXPECT_EQ(back.variables[l].variance, s[l]);
    EXPECT_EQ(back.variables[l].identified, l != 2);
  }
  auto doc = nlohmann::json::parse(model.to_json());
  doc["variables"].erase(0);
  EXPECT_THROW(ActionTimeModel::from_json(doc.dump(), index), ValidationError);
  doc["variables"].push_back({{"id", "nope"}, {"mean", 1}, {"variance", 1}});
  EXPECT_THROW(ActionTimeModel::from_json(doc.dump(), index), ValidationError);
  EXPECT_THROW(ActionTimeModel::from_json("[]", index), ParseError);
}

TEST(Estimate, EmptyRecordsAreAnError) {
  const auto t = testsupport::two_line();
  EXPECT_THROW(estimate_action_times(t, {}), DataError);
}

TEST(Estimate, OneLineOfRecordsFlagsTheRest) {
  const auto t = testsupport::two_line();
  const WalkVariableIndex index(t);
  const auto truth = ActionTimeModel::from_file(testsupport::data_path("two_line_31_truth.json"), index);
  const RouteTable routes(t);
  // Blue-line stations other than the two interchanges.
  std::vector<StationId> blue;
  for (StationId s : t.line(*t.find_line("ISL")).stations) {
    if (!t.is_transfer_station(s)) blue.push_back(s);
  }
  DemandProfile demand;
  for (StationId a : blue) {
    for (StationId b : blue) {
      if (a != b) demand.pairs.push_back({{a, b}, {{0, 3600, 400.0}}});
    }
  }
  std::vector<AfcRecord> records;
  for (int d = 0; d < 2; ++d) {
    auto day = generate_day(t, routes, truth, demand, d, 5);
    records.insert(records.end(), day.records.begin(), day.records.end());
  }
  const auto res = estimate_action_times(t, records);
  for (std::size_t l = 0; l < index.size(); ++l) {
    const bool blue_platform = index[l].name.rfind("ISL:", 0) == 0 && index[l].name != "ISL:CEN" &&
                               index[l].name != "ISL:ADM";
    EXPECT_EQ(res.model.variables[l].identified, blue_platform) << index[l].name;
    if (blue_platform) {
      EXPECT_NEAR(res.model.variables[l].mean, truth.variables[l].mean, 0.5) << index[l].name;
    } else {
      EXPECT_EQ(res.model.variables[l].mean, EstimatorOptions{}.default_mean);
    }
  }
  EXPECT_EQ(res.diagnostics.unidentified.size(), index.size() - blue.size());
}
