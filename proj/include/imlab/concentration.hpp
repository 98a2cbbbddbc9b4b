#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imlab/invariant_measure.hpp"
#include "imlab/map_core.hpp"
#include "imlab/observables.hpp"

namespace imlab {

/// alpha range of the proven variance inequality; runs outside it are
/// allowed but labeled exploratory.
inline constexpr double kProvenAlphaBound = 0.12701665379258298;  // 4 - sqrt(15)

struct VarianceEstimate {
  double variance = 0.0;
  double ci_lo = 0.0;  // bootstrap 95% interval
  double ci_hi = 0.0;
  double mean = 0.0;
  std::size_t trials = 0;
};

/// Monte Carlo variance of K over mu-sampled orbit segments with a
/// 1000-resample bootstrap interval. Per-trial RNG substreams keyed by
/// (seed, trial), so the output is identical for any worker count.
/// Optionally hands back the per-trial K values.
VarianceEstimate estimate_variance(const Observable& obs, const MapModel& model,
                                   const UlamMeasure& measure, std::size_t trials,
                                   std::uint64_t seed, unsigned threads,
                                   std::vector<double>* values_out = nullptr);

struct TailRow {
  double t = 0.0;
  double empirical = 0.0;  // P(|K - mean| >= t)
  double bound = 0.0;      // D_hat * sum Lip^2 / t^2
  bool vacuous = false;    // bound >= 1
};

/// Chebyshev-style tail table from already-computed trial values.
std::vector<TailRow> chebyshev_tail_table(std::span<const double> values,
                                          double lip_sq_sum, double d_hat,
                                          std::span<const double> t_grid);

struct ConcentrationReport {
  std::string observable;
  double alpha = 0.0;
  std::size_t n = 0;
  std::size_t trials = 0;
  VarianceEstimate variance;
  double lip_sq_sum = 0.0;
  double ratio = 0.0;  // variance / lip_sq_sum
  std::vector<TailRow> tails;
  bool exploratory = false;  // alpha outside [0, 4 - sqrt 15)
};

/// Pass/fail per report: upper variance CI <= d_hat * sum Lip_j^2.
std::vector<bool> verify_inequality(std::span<const ConcentrationReport> reports,
                                    double d_hat);

/// All tail rows with a nonvacuous bound satisfy empirical <= bound.
bool chebyshev_tails_ok(std::span<const ConcentrationReport> reports);

struct BatteryConfig {
  std::vector<std::size_t> n_grid{100, 1000, 10000};
  std::size_t trials = 2000;
  double d_hat_safety = 10.0;  // D_hat = safety * max Birkhoff ratio at smallest n
  std::vector<double> t_multipliers{0.5, 1.0, 2.0, 3.0, 5.0, 8.0};  // times std dev
  // shadowing / kde battery parameters
  IntervalSet shadowing_set{{0.4, 0.6}};
  double shadowing_epsilon = 0.1;
  int shadowing_candidates = 64;
  int quantile_atoms = 10000;
  int omega_count = 1024;
  int covariance_lags = 400;
  int certify_samples = 40;
};

struct BatteryResult {
  double d_hat = 0.0;
  bool exploratory = false;
  std::vector<ConcentrationReport> reports;
  std::vector<bool> within_bound;
  bool all_within = false;
  double birkhoff_ratio_spread = 0.0;  // max/min ratio of the sqrt-n identity family
  bool birkhoff_ratio_stable = false;  // spread < 2
  bool tails_ok = false;
  std::vector<std::string> certification_failures;
};

/// The full observable battery at every n in the grid: three sqrt-n Birkhoff
/// sums, empirical-W1, KDE-TV, periodogram-sup, shadowing Z_A and the
/// mollified mismatch. Every member passes certify_lipschitz before use.
BatteryResult run_concentration_battery(const MapModel& model, const UlamMeasure& measure,
                                        const UlamOperator& op, const BatteryConfig& config,
                                        std::uint64_t seed, unsigned threads);

}  // namespace imlab
