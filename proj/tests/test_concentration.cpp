#include <doctest.h>

#include <cmath>
#include <vector>

#include "imlab/concentration.hpp"
#include "imlab/rng.hpp"
#include "imlab/stats.hpp"

using namespace imlab;

namespace {

const UlamSystem& system03() {
  static const UlamSystem sys = build_ulam(MapModel(0.3), 1024, GridScheme::markov_refined);
  return sys;
}

const UlamSystem& system01() {
  static const UlamSystem sys = build_ulam(MapModel(0.1), 1024, GridScheme::markov_refined);
  return sys;
}

Observable constant_observable(std::size_t n) {
  Observable obs;
  obs.label = "constant";
  obs.n = n;
  obs.lip_bounds.assign(n, 1.0);  // any positive upper bound is valid
  obs.evaluate = [](std::span<const double>) { return 5.0; };
  return obs;
}

Observable coordinate_observable(std::size_t n) {
  Observable obs;
  obs.label = "first_coordinate";
  obs.n = n;
  obs.lip_bounds.assign(n, 1.0);
  obs.evaluate = [](std::span<const double> z) { return z[0]; };
  return obs;
}

}  // namespace

TEST_CASE("constant observable has zero variance and passes any bound") {
  const MapModel m(0.3);
  const auto& sys = system03();
  const Observable k = constant_observable(16);
  const VarianceEstimate est = estimate_variance(k, m, sys.measure, 300, 5, 2);
  CHECK(est.variance == doctest::Approx(0.0));
  CHECK(est.mean == doctest::Approx(5.0));

  ConcentrationReport report;
  report.variance = est;
  report.lip_sq_sum = k.lip_sq_sum();
  const auto ok = verify_inequality(std::vector<ConcentrationReport>{report}, 1e-6);
  CHECK(ok[0]);
}

TEST_CASE("coordinate observable variance matches the quadrature variance") {
  const MapModel m(0.3);
  const auto& sys = system03();
  const Observable k = coordinate_observable(4);
  const VarianceEstimate est = estimate_variance(k, m, sys.measure, 4000, 11, 2);
  const double mean_x = sys.measure.integrate([](double x) { return x; });
  const double var_x =
      sys.measure.integrate([mean_x](double x) { return (x - mean_x) * (x - mean_x); });
  CHECK(var_x >= est.ci_lo * 0.9);
  CHECK(var_x <= est.ci_hi * 1.1);
}

TEST_CASE("variance estimation is deterministic and thread-invariant") {
  const MapModel m(0.3);
  const auto& sys = system03();
  const Observable k = coordinate_observable(8);
  std::vector<double> v1, v2;
  const VarianceEstimate a = estimate_variance(k, m, sys.measure, 500, 3, 1, &v1);
  const VarianceEstimate b = estimate_variance(k, m, sys.measure, 500, 3, 8, &v2);
  CHECK(v1 == v2);
  CHECK(a.variance == b.variance);
  CHECK(a.ci_lo == b.ci_lo);
  CHECK(a.ci_hi == b.ci_hi);
}

TEST_CASE("doubling trials shrinks the bootstrap interval roughly by sqrt(2)") {
  const MapModel m(0.3);
  const auto& sys = system03();
  const Observable k = coordinate_observable(4);
  const VarianceEstimate small = estimate_variance(k, m, sys.measure, 1000, 21, 2);
  const VarianceEstimate big = estimate_variance(k, m, sys.measure, 2000, 22, 2);
  const double w_small = small.ci_hi - small.ci_lo;
  const double w_big = big.ci_hi - big.ci_lo;
  const double ratio = w_big / w_small;
  CHECK(ratio > 0.707 * 0.7);
  CHECK(ratio < 0.707 * 1.3);
}

TEST_CASE("scale equivariance of the ratio") {
  const MapModel m(0.3);
  const auto& sys = system03();
  Observable k = coordinate_observable(4);
  std::vector<double> values;
  const VarianceEstimate base = estimate_variance(k, m, sys.measure, 400, 9, 2, &values);

  Observable scaled = k;
  scaled.label = "scaled";
  const double c = 3.5;
  scaled.lip_bounds.assign(4, c);
  scaled.evaluate = [](std::span<const double> z) { return 3.5 * z[0]; };
  const VarianceEstimate est_scaled = estimate_variance(scaled, m, sys.measure, 400, 9, 2);
  CHECK(est_scaled.variance == doctest::Approx(c * c * base.variance).epsilon(1e-10));
  CHECK((est_scaled.variance / scaled.lip_sq_sum()) ==
        doctest::Approx(base.variance / k.lip_sq_sum()).epsilon(1e-10));
}

TEST_CASE("sqrt-n birkhoff variance approaches the green-kubo limit") {
  const MapModel m(0.3);
  const auto& sys = system03();
  const double mean_x = sys.measure.integrate([](double x) { return x; });
  const auto v_grid = sys.measure.grid_function([mean_x](double x) { return x - mean_x; });
  const CovarianceSeries cov = covariance_series(sys.op, sys.measure, v_grid, v_grid, 400);
  const GreenKubo gk = green_kubo_sigma2(cov);

  const std::size_t n = 10000;
  const Observable k = birkhoff_observable([mean_x](double x) { return x - mean_x; }, 1.0,
                                           n, BirkhoffNormalization::sqrt_n, "b");
  const VarianceEstimate est = estimate_variance(k, m, sys.measure, 2000, 31, 2);
  CHECK(std::abs(est.variance - gk.sigma2) <= 0.15 * gk.sigma2);
}

TEST_CASE("chebyshev tail table marks vacuous rows and controls the rest") {
  RngStream rng(41);
  std::vector<double> values(5000);
  for (double& v : values) v = rng.next_double();  // uniform: var = 1/12
  const double lip_sq = 1.0;
  const double d_hat = 0.2;  // bound = 0.2 / t^2
  const double sd = std::sqrt(sample_variance(values));
  const std::vector<double> ts{0.5 * sd, sd, 2.0 * sd, 4.0 * sd};
  const auto table = chebyshev_tail_table(values, lip_sq, d_hat, ts);
  REQUIRE(table.size() == 4);
  CHECK(table[0].vacuous);  // t below one standard deviation: bound >= 1
  for (const auto& row : table)
    if (!row.vacuous) CHECK(row.empirical <= row.bound);

  const auto table2 = chebyshev_tail_table(values, lip_sq, d_hat, ts);
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(table[i].empirical == table2[i].empirical);
    CHECK(table[i].bound == table2[i].bound);
  }
}

TEST_CASE("small battery at alpha = 0.1 is inside the proven regime and passes") {
  const MapModel m(0.1);
  const auto& sys = system01();
  BatteryConfig config;
  config.n_grid = {64, 256};
  config.trials = 250;
  config.certify_samples = 12;
  config.shadowing_candidates = 16;
  config.quantile_atoms = 2000;
  config.omega_count = 256;
  config.covariance_lags = 150;
  const BatteryResult result = run_concentration_battery(m, sys.measure, sys.op, config, 7, 2);
  CHECK(!result.exploratory);
  CHECK(result.certification_failures.empty());
  CHECK(result.d_hat > 0.0);
  CHECK(result.reports.size() == 16);  // 8 members x 2 sizes
  CHECK(result.all_within);
  CHECK(result.tails_ok);
}

TEST_CASE("battery outside the proven alpha range is labeled exploratory") {
  const MapModel m(0.2);  // 0.2 > 4 - sqrt(15) ~ 0.127
  static const UlamSystem sys = build_ulam(m, 256, GridScheme::markov_refined);
  BatteryConfig config;
  config.n_grid = {64};
  config.trials = 120;
  config.certify_samples = 8;
  config.shadowing_candidates = 8;
  config.quantile_atoms = 500;
  config.omega_count = 128;
  config.covariance_lags = 60;
  const BatteryResult result = run_concentration_battery(m, sys.measure, sys.op, config, 3, 2);
  CHECK(result.exploratory);
  for (const auto& r : result.reports) CHECK(r.exploratory);
}
