#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "imlab/invariant_measure.hpp"
#include "imlab/kde.hpp"
#include "imlab/map_core.hpp"
#include "imlab/observables.hpp"

namespace imlab {

/// Almost-sure CLT: weighted empirical measures A_n of the normalized
/// Birkhoff sums S_k v / sqrt(k) with harmonic weights, compared to
/// N(0, sigma_v^2) in Kantorovich distance at the checkpoints.
struct AscltConfig {
  std::size_t n_max = 100000;
  std::vector<std::size_t> checkpoints{1000, 10000, 100000};
  std::size_t trials = 10;  // orbits
  int covariance_lags = 400;
};

struct AscltResult {
  GreenKubo green_kubo;
  std::vector<std::size_t> checkpoints;
  std::vector<std::vector<double>> kappa;  // [orbit][checkpoint]
  std::vector<double> medians;             // per checkpoint
};

AscltResult run_asclt(const MapModel& model, const UlamMeasure& measure,
                      const UlamOperator& op, const std::function<double(double)>& v_centered,
                      const AscltConfig& config, std::uint64_t seed, unsigned threads);

/// Kernel density estimation in total variation along the schedule
/// a_n = n^{-exponent} (or explicit bandwidths).
struct KdeConfig {
  std::vector<std::size_t> n_grid{1000, 10000, 100000};
  double bandwidth_exponent = 0.25;
  std::vector<double> explicit_bandwidths;  // overrides the exponent if set
  std::size_t trials = 100;
  KernelType kernel = KernelType::triangular;
  double tail_t_factor = 2.0;  // tail threshold = factor * bias scale
};

struct KdeResult {
  std::vector<std::size_t> n_grid;
  std::vector<double> bandwidths;
  std::vector<std::vector<double>> tv;  // [n_index][trial]
  std::vector<double> medians;
  double max_integral_error = 0.0;  // max |int h_n - 1| over all orbits
  bool medians_decreasing = false;
  std::vector<double> tail_thresholds;  // t_n per grid point
  std::vector<double> tail_empirical;   // P(TV > t_n)
  std::vector<double> tail_bounds;      // C / (t^2 n a^2), C calibrated at first n
  double tail_constant = 0.0;
  bool tail_consistent = false;
};

KdeResult run_kde(const MapModel& model, const UlamMeasure& measure,
                  const KdeConfig& config, std::uint64_t seed, unsigned threads);

/// Empirical measure in Kantorovich distance: kappa(E_n, mu) per n.
struct EmpiricalMeasureConfig {
  std::vector<std::size_t> n_grid{100, 1000, 10000, 100000};
  std::size_t trials = 200;
  int quantile_atoms = 10000;
};

struct EmpiricalMeasureResult {
  std::vector<std::size_t> n_grid;
  std::vector<std::vector<double>> kappa;  // [n_index][trial]
  std::vector<double> medians;
  double c_hat = 0.0;              // calibrated so median(n0) = c_hat n0^{-1/4}
  bool medians_monotone = false;   // strictly nonincreasing
  bool bound_ok = false;           // median(n) <= c_hat n^{-1/4} beyond n0
  double fitted_beta = 0.0;        // median ~ n^{-beta}
};

EmpiricalMeasureResult run_empirical_measure(const MapModel& model,
                                             const UlamMeasure& measure,
                                             const EmpiricalMeasureConfig& config,
                                             std::uint64_t seed, unsigned threads);

/// Integrated periodogram: mean of (sup_w |J_n - J^v|)^2 per n, plus the
/// grid-mean Parseval identity at n = 64.
struct PeriodogramConfig {
  std::vector<std::size_t> n_grid{256, 1024, 4096};
  std::size_t trials = 200;
  int omega_count = 1024;
  int covariance_lags = 400;
};

struct PeriodogramResult {
  std::vector<std::size_t> n_grid;
  std::vector<std::vector<double>> sup_dev;  // [n_index][trial]
  std::vector<double> mean_sq;               // mean of sup^2
  double c_hat = 0.0;   // calibrated at n0 against (1+log n)^{4/3} n^{-2/3}
  bool decreasing = false;
  bool bound_ok = false;
  double parseval_error = 0.0;  // |grid mean of I_64 - empirical second moment|
};

PeriodogramResult run_periodogram(const MapModel& model, const UlamMeasure& measure,
                                  const UlamOperator& op,
                                  const std::function<double(double)>& v_centered,
                                  const PeriodogramConfig& config, std::uint64_t seed,
                                  unsigned threads);

/// Shadowing quality Z_A and mismatch Z'_{A,eps}. The candidate set is the
/// fixed grid augmented with the orbit's own start point whenever it lies in
/// A (making Z_A exactly zero there).
struct ShadowingConfig {
  IntervalSet a_set{{0.4, 0.6}};
  std::vector<std::size_t> n_grid{100, 1000, 10000};
  std::vector<double> eps_grid{0.05, 0.1, 0.2};
  std::size_t trials = 200;
  int y_candidates = 64;
};

struct ShadowingResult {
  std::vector<std::size_t> n_grid;
  std::vector<double> eps_grid;
  std::vector<std::vector<double>> z_a;                   // [n_index][trial]
  std::vector<std::vector<std::vector<double>>> zp_moll;  // [n_index][eps_index][trial]
  std::vector<std::vector<std::vector<double>>> zp_raw;
  std::vector<double> q75_scaled;  // upper quartile of n^{1/3} Z_A per n
  double q75_spread = 0.0;         // max / min of the above
  bool q75_stable = false;         // spread <= 2
  bool z_scale_bounded = false;    // q75 scaled <= value calibrated at smallest n
  std::vector<std::vector<double>> zp_scaled_q75;  // [n_index][eps_index]
  double zp_calibrated = 0.0;
  bool zp_scale_bounded = false;
  bool pointwise_ok = false;  // Z' <= Z_A / eps per trial, raw and mollified
};

ShadowingResult run_shadowing(const MapModel& model, const UlamMeasure& measure,
                              const ShadowingConfig& config, std::uint64_t seed,
                              unsigned threads);

}  // namespace imlab
