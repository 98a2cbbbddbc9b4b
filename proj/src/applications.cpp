#include "imlab/applications.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "imlab/parallel.hpp"
#include "imlab/periodogram.hpp"
#include "imlab/rng.hpp"
#include "imlab/stats.hpp"
#include "imlab/wasserstein.hpp"

namespace imlab {

namespace {

std::vector<std::size_t> sorted_grid(std::vector<std::size_t> grid, const char* where) {
  if (grid.empty()) throw std::invalid_argument(std::string(where) + ": empty n grid");
  std::sort(grid.begin(), grid.end());
  return grid;
}

double upper_quartile(std::vector<double> v) { return quantile(std::move(v), 0.75); }

}  // namespace

AscltResult run_asclt(const MapModel& model, const UlamMeasure& measure,
                      const UlamOperator& op, const std::function<double(double)>& v_centered,
                      const AscltConfig& config, std::uint64_t seed, unsigned threads) {
  if (!(model.alpha < 0.5))
    throw std::invalid_argument("run_asclt: needs alpha < 1/2 (CLT regime)");
  if (config.checkpoints.empty()) throw std::invalid_argument("run_asclt: no checkpoints");
  for (std::size_t c : config.checkpoints)
    if (c < 1 || c > config.n_max)
      throw std::invalid_argument("run_asclt: checkpoint outside [1, n_max]");

  const std::vector<double> v_grid = measure.grid_function(v_centered);
  const CovarianceSeries cov =
      covariance_series(op, measure, v_grid, v_grid, config.covariance_lags);
  AscltResult result;
  result.green_kubo = green_kubo_sigma2(cov);
  if (!(result.green_kubo.sigma2 > 0.0))
    throw std::invalid_argument("run_asclt: degenerate asymptotic variance");

  result.checkpoints = config.checkpoints;
  std::sort(result.checkpoints.begin(), result.checkpoints.end());
  result.kappa.assign(config.trials, std::vector<double>(result.checkpoints.size(), 0.0));

  const GaussianTarget target{0.0, result.green_kubo.sigma2};
  parallel_for(config.trials, threads, [&](std::size_t t) {
    RngStream rng = derive_stream(seed, "asclt-orbit", t);
    const double x0 = sample_mu_point(measure, rng);
    std::vector<double> orbit(config.n_max);
    iterate_orbit_into(model, x0, orbit);

    std::vector<double> locations(config.n_max), weights(config.n_max);
    double s_k = 0.0;
    for (std::size_t k = 1; k <= config.n_max; ++k) {
      s_k += v_centered(orbit[k - 1]);
      locations[k - 1] = s_k / std::sqrt(static_cast<double>(k));
      weights[k - 1] = 1.0 / static_cast<double>(k);
    }
    for (std::size_t c = 0; c < result.checkpoints.size(); ++c) {
      const std::size_t n = result.checkpoints[c];
      EmpiricalDistribution a_n(
          std::vector<double>(locations.begin(), locations.begin() + n),
          std::vector<double>(weights.begin(), weights.begin() + n),
          SupportDomain::real_line);
      result.kappa[t][c] = w1_to_gaussian(a_n, target);
    }
  });

  for (std::size_t c = 0; c < result.checkpoints.size(); ++c) {
    std::vector<double> col(config.trials);
    for (std::size_t t = 0; t < config.trials; ++t) col[t] = result.kappa[t][c];
    result.medians.push_back(median(std::move(col)));
  }
  return result;
}

KdeResult run_kde(const MapModel& model, const UlamMeasure& measure,
                  const KdeConfig& config, std::uint64_t seed, unsigned threads) {
  KdeResult result;
  result.n_grid = sorted_grid(config.n_grid, "run_kde");
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const double n = static_cast<double>(result.n_grid[i]);
    double a = config.explicit_bandwidths.empty()
                   ? std::pow(n, -config.bandwidth_exponent)
                   : config.explicit_bandwidths.at(i);
    result.bandwidths.push_back(a);
  }
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const double a = result.bandwidths[i];
    if (!(a > 0.0 && a < 1.0))
      throw std::invalid_argument("run_kde: bandwidth outside (0,1)");
    if (i > 0) {
      if (result.bandwidths[i] > result.bandwidths[i - 1])
        throw std::invalid_argument("run_kde: bandwidths must be nonincreasing (a_n -> 0)");
      if (static_cast<double>(result.n_grid[i]) * result.bandwidths[i] <=
          static_cast<double>(result.n_grid[i - 1]) * result.bandwidths[i - 1])
        throw std::invalid_argument("run_kde: n * a_n must increase along the schedule");
    }
  }

  const Kernel kernel{config.kernel};
  result.tv.assign(result.n_grid.size(), {});
  std::vector<double> integral_errors(result.n_grid.size(), 0.0);
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const std::size_t n = result.n_grid[i];
    const double a = result.bandwidths[i];
    std::vector<double> tvs(config.trials), ierr(config.trials);
    parallel_for(config.trials, threads, [&](std::size_t t) {
      RngStream rng = derive_stream(seed, "kde-trial", t, i);
      const double x0 = sample_mu_point(measure, rng);
      std::vector<double> orbit(n);
      iterate_orbit_into(model, x0, orbit);
      tvs[t] = kde_tv_distance(orbit, kernel, a, measure);
      ierr[t] = std::abs(kde_density_integral(orbit, kernel, a) - 1.0);
    });
    result.tv[i] = std::move(tvs);
    integral_errors[i] = *std::max_element(ierr.begin(), ierr.end());
    result.medians.push_back(median(result.tv[i]));
  }
  result.max_integral_error =
      *std::max_element(integral_errors.begin(), integral_errors.end());
  result.medians_decreasing = true;
  for (std::size_t i = 1; i < result.medians.size(); ++i)
    if (result.medians[i] >= result.medians[i - 1]) result.medians_decreasing = false;

  // Tail consistency at t_n = factor * (a^{1-alpha} + 1/(sqrt(n) a^2)) against
  // C / (t^2 n a^2) with C calibrated at the smallest n.
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const double n = static_cast<double>(result.n_grid[i]);
    const double a = result.bandwidths[i];
    const double bias = std::pow(a, 1.0 - model.alpha) + 1.0 / (std::sqrt(n) * a * a);
    const double t = config.tail_t_factor * bias;
    std::size_t hits = 0;
    for (double x : result.tv[i])
      if (x > t) ++hits;
    result.tail_thresholds.push_back(t);
    result.tail_empirical.push_back(static_cast<double>(hits) /
                                    static_cast<double>(config.trials));
  }
  {
    const double n0 = static_cast<double>(result.n_grid[0]);
    const double a0 = result.bandwidths[0];
    const double t0 = result.tail_thresholds[0];
    const double p0 = std::max(result.tail_empirical[0],
                               1.0 / static_cast<double>(config.trials));
    result.tail_constant = p0 * t0 * t0 * n0 * a0 * a0;
  }
  result.tail_consistent = true;
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const double n = static_cast<double>(result.n_grid[i]);
    const double a = result.bandwidths[i];
    const double t = result.tail_thresholds[i];
    const double bound = result.tail_constant / (t * t * n * a * a);
    result.tail_bounds.push_back(bound);
    if (i > 0 && result.tail_empirical[i] > bound) result.tail_consistent = false;
  }
  return result;
}

EmpiricalMeasureResult run_empirical_measure(const MapModel& model,
                                             const UlamMeasure& measure,
                                             const EmpiricalMeasureConfig& config,
                                             std::uint64_t seed, unsigned threads) {
  EmpiricalMeasureResult result;
  result.n_grid = sorted_grid(config.n_grid, "run_empirical_measure");
  const EmpiricalDistribution target =
      quantile_discretization(measure, config.quantile_atoms);

  result.kappa.assign(result.n_grid.size(), {});
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const std::size_t n = result.n_grid[i];
    std::vector<double> ks(config.trials);
    parallel_for(config.trials, threads, [&](std::size_t t) {
      RngStream rng = derive_stream(seed, "empirical-trial", t, i);
      const double x0 = sample_mu_point(measure, rng);
      std::vector<double> orbit(n);
      iterate_orbit_into(model, x0, orbit);
      const auto empirical =
          EmpiricalDistribution::equal_weights(std::move(orbit), SupportDomain::unit_interval);
      ks[t] = w1_distance(empirical, target);
    });
    result.kappa[i] = std::move(ks);
    result.medians.push_back(median(result.kappa[i]));
  }

  result.medians_monotone = true;
  for (std::size_t i = 1; i < result.medians.size(); ++i)
    if (result.medians[i] > result.medians[i - 1]) result.medians_monotone = false;

  const double n0 = static_cast<double>(result.n_grid[0]);
  result.c_hat = result.medians[0] * std::pow(n0, 0.25);
  result.bound_ok = true;
  for (std::size_t i = 1; i < result.n_grid.size(); ++i) {
    const double allowed =
        result.c_hat * std::pow(static_cast<double>(result.n_grid[i]), -0.25);
    if (result.medians[i] > allowed) result.bound_ok = false;
  }

  std::vector<double> xs(result.n_grid.begin(), result.n_grid.end());
  result.fitted_beta = -power_law_fit(xs, result.medians).slope;
  return result;
}

PeriodogramResult run_periodogram(const MapModel& model, const UlamMeasure& measure,
                                  const UlamOperator& op,
                                  const std::function<double(double)>& v_centered,
                                  const PeriodogramConfig& config, std::uint64_t seed,
                                  unsigned threads) {
  PeriodogramResult result;
  result.n_grid = sorted_grid(config.n_grid, "run_periodogram");

  const std::vector<double> v_grid = measure.grid_function(v_centered);
  const CovarianceSeries cov =
      covariance_series(op, measure, v_grid, v_grid, config.covariance_lags);
  const PeriodogramGrid grid(config.omega_count);
  const std::vector<double> target = grid.spectral_target(cov);

  result.sup_dev.assign(result.n_grid.size(), {});
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const std::size_t n = result.n_grid[i];
    std::vector<double> sup(config.trials);
    parallel_for(config.trials, threads, [&](std::size_t t) {
      RngStream rng = derive_stream(seed, "periodogram-trial", t, i);
      const double x0 = sample_mu_point(measure, rng);
      std::vector<double> orbit(n);
      iterate_orbit_into(model, x0, orbit);
      std::vector<double> values(n);
      for (std::size_t j = 0; j < n; ++j) values[j] = v_centered(orbit[j]);
      const std::vector<double> jn = grid.integrated_periodogram(values);
      double worst = 0.0;
      for (std::size_t g = 0; g < jn.size(); ++g)
        worst = std::max(worst, std::abs(jn[g] - target[g]));
      sup[t] = worst;
    });
    result.sup_dev[i] = std::move(sup);
    std::vector<double> sq(config.trials);
    for (std::size_t t = 0; t < config.trials; ++t)
      sq[t] = result.sup_dev[i][t] * result.sup_dev[i][t];
    result.mean_sq.push_back(mean(sq));
  }

  result.decreasing = true;
  for (std::size_t i = 1; i < result.mean_sq.size(); ++i)
    if (result.mean_sq[i] >= result.mean_sq[i - 1]) result.decreasing = false;

  const auto envelope = [](double n) {
    return std::pow(1.0 + std::log(n), 4.0 / 3.0) * std::pow(n, -2.0 / 3.0);
  };
  const double n0 = static_cast<double>(result.n_grid[0]);
  result.c_hat = result.mean_sq[0] / envelope(n0);
  result.bound_ok = true;
  for (std::size_t i = 1; i < result.n_grid.size(); ++i)
    if (result.mean_sq[i] > result.c_hat * envelope(static_cast<double>(result.n_grid[i])))
      result.bound_ok = false;

  // Parseval echo at n = 64: the grid mean of I_n equals the empirical second
  // moment when the grid is finer than the orbit length.
  {
    constexpr std::size_t n64 = 64;
    RngStream rng = derive_stream(seed, "periodogram-parseval");
    const double x0 = sample_mu_point(measure, rng);
    std::vector<double> orbit(n64);
    iterate_orbit_into(model, x0, orbit);
    std::vector<double> values(n64);
    for (std::size_t j = 0; j < n64; ++j) values[j] = v_centered(orbit[j]);
    double grid_mean = 0.0;
    for (double w : grid.omegas()) grid_mean += PeriodogramGrid::raw_periodogram(values, w);
    grid_mean /= static_cast<double>(grid.size());
    double second_moment = 0.0;
    for (double v : values) second_moment += v * v;
    second_moment /= static_cast<double>(n64);
    result.parseval_error = std::abs(grid_mean - second_moment);
  }
  return result;
}

ShadowingResult run_shadowing(const MapModel& model, const UlamMeasure& measure,
                              const ShadowingConfig& config, std::uint64_t seed,
                              unsigned threads) {
  if (config.eps_grid.empty()) throw std::invalid_argument("run_shadowing: empty eps grid");
  for (double e : config.eps_grid)
    if (!(e > 0.0)) throw std::invalid_argument("run_shadowing: eps must be positive");
  double mass = 0.0;
  for (const auto& [lo, hi] : config.a_set) mass += measure.interval_mass(lo, hi);
  if (!(mass > 0.0)) throw std::invalid_argument("run_shadowing: A has zero measure");

  ShadowingResult result;
  result.n_grid = sorted_grid(config.n_grid, "run_shadowing");
  result.eps_grid = config.eps_grid;
  std::sort(result.eps_grid.begin(), result.eps_grid.end());

  const std::vector<double> candidates =
      shadowing_candidate_grid(config.a_set, config.y_candidates);
  const std::size_t n_eps = result.eps_grid.size();

  const auto in_a = [&](double x) {
    for (const auto& [lo, hi] : config.a_set)
      if (x >= lo && x <= hi) return true;
    return false;
  };

  result.z_a.assign(result.n_grid.size(), {});
  result.zp_moll.assign(result.n_grid.size(),
                        std::vector<std::vector<double>>(n_eps));
  result.zp_raw.assign(result.n_grid.size(),
                       std::vector<std::vector<double>>(n_eps));

  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const std::size_t n = result.n_grid[i];
    std::vector<double> flat(candidates.size() * n);
    for (std::size_t c = 0; c < candidates.size(); ++c)
      iterate_orbit_into(model, candidates[c], {flat.data() + c * n, n});

    std::vector<double> za(config.trials);
    std::vector<std::vector<double>> moll(n_eps, std::vector<double>(config.trials));
    std::vector<std::vector<double>> raw(n_eps, std::vector<double>(config.trials));

    parallel_for(config.trials, threads, [&](std::size_t t) {
      RngStream rng = derive_stream(seed, "shadowing-trial", t, i);
      const double x0 = sample_mu_point(measure, rng);
      if (in_a(x0)) {
        // y = x0 is admissible: every distance vanishes exactly.
        za[t] = 0.0;
        for (std::size_t e = 0; e < n_eps; ++e) moll[e][t] = raw[e][t] = 0.0;
        return;
      }
      std::vector<double> orbit(n);
      iterate_orbit_into(model, x0, orbit);
      double best_z = std::numeric_limits<double>::infinity();
      std::vector<double> best_moll(n_eps, std::numeric_limits<double>::infinity());
      std::vector<double> best_raw(n_eps, std::numeric_limits<double>::infinity());
      std::vector<double> acc_moll(n_eps), acc_raw(n_eps);
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const double* orb = flat.data() + c * n;
        double acc = 0.0;
        std::fill(acc_moll.begin(), acc_moll.end(), 0.0);
        std::fill(acc_raw.begin(), acc_raw.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
          const double d = std::abs(orbit[j] - orb[j]);
          acc += d;
          for (std::size_t e = 0; e < n_eps; ++e) {
            const double eps = result.eps_grid[e];
            const double ramp = eps / 10.0;
            if (d >= eps) {
              acc_moll[e] += 1.0;
              if (d > eps) acc_raw[e] += 1.0;
            } else if (d > eps - ramp) {
              acc_moll[e] += (d - (eps - ramp)) / ramp;
            }
          }
        }
        best_z = std::min(best_z, acc);
        for (std::size_t e = 0; e < n_eps; ++e) {
          best_moll[e] = std::min(best_moll[e], acc_moll[e]);
          best_raw[e] = std::min(best_raw[e], acc_raw[e]);
        }
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      za[t] = best_z * inv_n;
      for (std::size_t e = 0; e < n_eps; ++e) {
        moll[e][t] = best_moll[e] * inv_n;
        raw[e][t] = best_raw[e] * inv_n;
      }
    });

    result.z_a[i] = std::move(za);
    for (std::size_t e = 0; e < n_eps; ++e) {
      result.zp_moll[i][e] = std::move(moll[e]);
      result.zp_raw[i][e] = std::move(raw[e]);
    }
  }

  // Scale diagnostics.
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const double scale = std::cbrt(static_cast<double>(result.n_grid[i]));
    std::vector<double> scaled(result.z_a[i]);
    for (double& x : scaled) x *= scale;
    result.q75_scaled.push_back(upper_quartile(std::move(scaled)));
  }
  const double q_min = *std::min_element(result.q75_scaled.begin(), result.q75_scaled.end());
  const double q_max = *std::max_element(result.q75_scaled.begin(), result.q75_scaled.end());
  result.q75_spread = q_min > 0.0 ? q_max / q_min : std::numeric_limits<double>::infinity();
  result.q75_stable = result.q75_spread <= 2.0;
  result.z_scale_bounded = true;
  for (std::size_t i = 1; i < result.q75_scaled.size(); ++i)
    if (result.q75_scaled[i] > result.q75_scaled[0]) result.z_scale_bounded = false;

  result.zp_scaled_q75.assign(result.n_grid.size(), std::vector<double>(n_eps, 0.0));
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const double n_scale = std::cbrt(static_cast<double>(result.n_grid[i]));
    for (std::size_t e = 0; e < n_eps; ++e) {
      const double eps_scale = std::pow(result.eps_grid[e], 2.0 / 3.0);
      std::vector<double> scaled(result.zp_moll[i][e]);
      for (double& x : scaled) x *= n_scale * eps_scale;
      result.zp_scaled_q75[i][e] = upper_quartile(std::move(scaled));
    }
  }
  result.zp_calibrated =
      *std::max_element(result.zp_scaled_q75[0].begin(), result.zp_scaled_q75[0].end());
  result.zp_scale_bounded = true;
  for (std::size_t i = 1; i < result.n_grid.size(); ++i)
    for (std::size_t e = 0; e < n_eps; ++e)
      if (result.zp_scaled_q75[i][e] > result.zp_calibrated)
        result.zp_scale_bounded = false;

  result.pointwise_ok = true;
  for (std::size_t i = 0; i < result.n_grid.size(); ++i)
    for (std::size_t e = 0; e < n_eps; ++e)
      for (std::size_t t = 0; t < config.trials; ++t) {
        const double cap = result.z_a[i][t] / result.eps_grid[e] + 1e-12;
        if (result.zp_moll[i][e][t] > cap || result.zp_raw[i][e][t] > cap)
          result.pointwise_ok = false;
      }
  return result;
}

}  // namespace imlab
