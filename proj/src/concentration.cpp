#include "imlab/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "imlab/parallel.hpp"
#include "imlab/rng.hpp"
#include "imlab/stats.hpp"

namespace imlab {

VarianceEstimate estimate_variance(const Observable& obs, const MapModel& model,
                                   const UlamMeasure& measure, std::size_t trials,
                                   std::uint64_t seed, unsigned threads,
                                   std::vector<double>* values_out) {
  if (trials < 2) throw std::invalid_argument("estimate_variance: trials >= 2");
  std::vector<double> values(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    RngStream rng = derive_stream(seed, "variance-trial", t);
    const double x0 = sample_mu_point(measure, rng);
    std::vector<double> orbit(obs.n);
    iterate_orbit_into(model, x0, orbit);
    values[t] = obs.evaluate(orbit);
  });

  VarianceEstimate est;
  est.trials = trials;
  est.mean = mean(values);
  est.variance = sample_variance(values);

  constexpr int kResamples = 1000;
  std::vector<double> boot(kResamples);
  std::vector<double> resample(trials);
  for (int r = 0; r < kResamples; ++r) {
    RngStream rng = derive_stream(seed, "variance-bootstrap", static_cast<std::uint64_t>(r));
    for (std::size_t i = 0; i < trials; ++i) resample[i] = values[rng.next_below(trials)];
    boot[r] = sample_variance(resample);
  }
  std::sort(boot.begin(), boot.end());
  est.ci_lo = quantile_sorted(boot, 0.025);
  est.ci_hi = quantile_sorted(boot, 0.975);
  if (values_out) *values_out = std::move(values);
  return est;
}

std::vector<TailRow> chebyshev_tail_table(std::span<const double> values,
                                          double lip_sq_sum, double d_hat,
                                          std::span<const double> t_grid) {
  const double m = mean(values);
  std::vector<TailRow> rows;
  rows.reserve(t_grid.size());
  for (double t : t_grid) {
    if (!(t > 0.0)) continue;
    TailRow row;
    row.t = t;
    std::size_t hits = 0;
    for (double v : values)
      if (std::abs(v - m) >= t) ++hits;
    row.empirical = static_cast<double>(hits) / static_cast<double>(values.size());
    row.bound = d_hat * lip_sq_sum / (t * t);
    row.vacuous = row.bound >= 1.0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<bool> verify_inequality(std::span<const ConcentrationReport> reports,
                                    double d_hat) {
  std::vector<bool> ok;
  ok.reserve(reports.size());
  for (const auto& r : reports)
    ok.push_back(r.variance.ci_hi <= d_hat * r.lip_sq_sum);
  return ok;
}

bool chebyshev_tails_ok(std::span<const ConcentrationReport> reports) {
  for (const auto& r : reports)
    for (const auto& row : r.tails)
      if (!row.vacuous && row.empirical > row.bound) return false;
  return true;
}

namespace {

struct BatteryMember {
  Observable obs;
  bool birkhoff = false;
};

std::vector<BatteryMember> make_battery(const MapModel& model, const UlamMeasure& measure,
                                        const UlamOperator& op, std::size_t n,
                                        const BatteryConfig& config) {
  std::vector<BatteryMember> members;
  const double mean_x = measure.integrate([](double x) { return x; });
  const auto v_id = [mean_x](double x) { return x - mean_x; };

  members.push_back({birkhoff_observable(v_id, 1.0, n, BirkhoffNormalization::sqrt_n,
                                         "birkhoff_sqrtn_id"),
                     true});
  const double mean_sin =
      measure.integrate([](double x) { return std::sin(2.0 * std::numbers::pi * x); });
  members.push_back({birkhoff_observable(
                         [mean_sin](double x) {
                           return std::sin(2.0 * std::numbers::pi * x) - mean_sin;
                         },
                         2.0 * std::numbers::pi, n, BirkhoffNormalization::sqrt_n,
                         "birkhoff_sqrtn_sin"),
                     true});
  const double mean_tent = measure.integrate([](double x) { return std::abs(x - 0.5); });
  members.push_back({birkhoff_observable(
                         [mean_tent](double x) { return std::abs(x - 0.5) - mean_tent; },
                         1.0, n, BirkhoffNormalization::sqrt_n, "birkhoff_sqrtn_tent"),
                     true});

  members.push_back({empirical_w1_observable(measure, n, config.quantile_atoms), false});

  const double bandwidth = std::pow(static_cast<double>(n), -0.25);
  members.push_back(
      {kde_tv_observable(measure, Kernel{KernelType::triangular}, bandwidth, n), false});

  const std::vector<double> v_grid = measure.grid_function(v_id);
  const CovarianceSeries cov =
      covariance_series(op, measure, v_grid, v_grid, config.covariance_lags);
  members.push_back({periodogram_sup_observable(v_id, 1.0, std::max(mean_x, 1.0 - mean_x),
                                                n, config.omega_count, cov),
                     false});

  ShadowingObservables shadow =
      shadowing_observables(model, measure, config.shadowing_set, n,
                            config.shadowing_epsilon, config.shadowing_candidates);
  members.push_back({std::move(shadow.average_distance), false});
  members.push_back({std::move(shadow.mismatch_mollified), false});
  return members;
}

}  // namespace

BatteryResult run_concentration_battery(const MapModel& model, const UlamMeasure& measure,
                                        const UlamOperator& op, const BatteryConfig& config,
                                        std::uint64_t seed, unsigned threads) {
  if (config.n_grid.empty())
    throw std::invalid_argument("run_concentration_battery: empty n grid");
  BatteryResult result;
  result.exploratory = !(model.alpha < kProvenAlphaBound);

  std::vector<std::size_t> n_grid = config.n_grid;
  std::sort(n_grid.begin(), n_grid.end());

  struct Pending {
    ConcentrationReport report;
    std::vector<double> values;
    bool birkhoff = false;
  };
  std::vector<Pending> pending;

  for (std::size_t n : n_grid) {
    auto members = make_battery(model, measure, op, n, config);
    for (auto& member : members) {
      const auto cert = certify_lipschitz(member.obs, config.certify_samples,
                                          seed ^ 0x5eedc0deULL);
      if (!cert.passed) {
        result.certification_failures.push_back(cert.message);
        continue;
      }
      Pending p;
      p.birkhoff = member.birkhoff;
      p.report.observable = member.obs.label;
      p.report.alpha = model.alpha;
      p.report.n = n;
      p.report.trials = config.trials;
      p.report.lip_sq_sum = member.obs.lip_sq_sum();
      p.report.exploratory = result.exploratory;
      p.report.variance = estimate_variance(member.obs, model, measure, config.trials,
                                            seed, threads, &p.values);
      p.report.ratio = p.report.variance.variance / p.report.lip_sq_sum;
      pending.push_back(std::move(p));
    }
  }

  // Calibrate D_hat on the Birkhoff family at the smallest n.
  double max_birkhoff_ratio = 0.0;
  for (const auto& p : pending)
    if (p.birkhoff && p.report.n == n_grid.front())
      max_birkhoff_ratio = std::max(max_birkhoff_ratio, p.report.ratio);
  if (!(max_birkhoff_ratio > 0.0))
    throw std::runtime_error("run_concentration_battery: calibration family missing");
  result.d_hat = config.d_hat_safety * max_birkhoff_ratio;

  double id_ratio_min = std::numeric_limits<double>::infinity();
  double id_ratio_max = 0.0;
  for (auto& p : pending) {
    const double sd = std::sqrt(std::max(p.report.variance.variance, 0.0));
    std::vector<double> t_grid;
    for (double mult : config.t_multipliers)
      if (sd > 0.0) t_grid.push_back(mult * sd);
    p.report.tails = chebyshev_tail_table(p.values, p.report.lip_sq_sum, result.d_hat,
                                          t_grid);
    if (p.report.observable == "birkhoff_sqrtn_id") {
      id_ratio_min = std::min(id_ratio_min, p.report.ratio);
      id_ratio_max = std::max(id_ratio_max, p.report.ratio);
    }
    result.reports.push_back(std::move(p.report));
  }

  result.within_bound = verify_inequality(result.reports, result.d_hat);
  result.all_within =
      std::all_of(result.within_bound.begin(), result.within_bound.end(),
                  [](bool b) { return b; }) &&
      result.certification_failures.empty();
  result.birkhoff_ratio_spread =
      id_ratio_min > 0.0 ? id_ratio_max / id_ratio_min
                         : std::numeric_limits<double>::infinity();
  result.birkhoff_ratio_stable = result.birkhoff_ratio_spread < 2.0;
  result.tails_ok = chebyshev_tails_ok(result.reports);
  return result;
}

}  // namespace imlab
