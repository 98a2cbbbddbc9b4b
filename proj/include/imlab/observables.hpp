#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imlab/invariant_measure.hpp"
#include "imlab/kde.hpp"
#include "imlab/map_core.hpp"

namespace imlab {

/// Componentwise Lipschitz functional K : [0,1]^n -> R with certified
/// per-coordinate Lipschitz upper bounds.
struct Observable {
  std::string label;
  std::size_t n = 0;
  std::vector<double> lip_bounds;  // size n, finite, > 0
  std::function<double(std::span<const double>)> evaluate;

  double lip_sq_sum() const;
};

struct CertificationResult {
  bool passed = true;
  double worst_ratio = 0.0;  // max |dK| / (lip_j |dz_j|) seen
  std::size_t worst_coordinate = 0;
  double worst_delta = 0.0;
  std::vector<std::pair<std::size_t, double>> per_coordinate;  // scanned coords
  std::string message;
};

/// Checks |K(..,z_j,..) - K(..,z_j',..)| <= lip_j |z_j - z_j'| (1 + 1e-8) + eps_abs
/// over random base points and multi-scale perturbations |d| in {1e-2,1e-4,1e-6}.
/// eps_abs = 1e-10 (1 + |K|) absorbs float noise of the two large evaluations.
CertificationResult certify_lipschitz(const Observable& obs, int samples,
                                      std::uint64_t seed);

/// Raw finite-difference sensitivity sup |dK|/|dz_j| over the same scan;
/// used to calibrate declared bounds for observables without handy closed
/// forms. Deterministic given the seed.
double finite_difference_lip_scan(const std::function<double(std::span<const double>)>& eval,
                                  std::size_t n, int samples, std::uint64_t seed);

enum class BirkhoffNormalization { sum, sqrt_n, n };

/// K(z) = sum_j v(z_j) / norm with lip_bounds[j] = Lip(v) / norm.
Observable birkhoff_observable(std::function<double(double)> v, double lip_v,
                               std::size_t n, BirkhoffNormalization norm,
                               std::string label);

/// K(z) = W1(empirical measure of z, quantile discretization of mu);
/// lip_bounds[j] = 1/n.
Observable empirical_w1_observable(const UlamMeasure& measure, std::size_t n,
                                   int quantile_atoms = 10000);

/// K(z) = int |h_n(z; s) - h(s)| ds for the kernel density estimate with
/// bandwidth a. The declared bound is a finite-difference sup scan inflated
/// by 25%, reported through the c_psi / (n a^2) parametrization.
struct KdeLipScan {
  int samples = 48;
  std::uint64_t seed = 1013;
  double safety = 1.25;
};
Observable kde_tv_observable(const UlamMeasure& measure, Kernel kernel, double bandwidth,
                             std::size_t n, const KdeLipScan& scan = {});

/// K(z) = sup over the frequency grid of |J_n(w; z) - J^v(w)|;
/// lip_bounds[j] = 4 pi ||v||_inf Lip(v).
Observable periodogram_sup_observable(std::function<double(double)> v, double lip_v,
                                      double sup_v, std::size_t n, int omega_count,
                                      const CovarianceSeries& covariance);

/// Shadowing quality Z_A and mismatch counts Z'_{A,eps} against a fixed
/// candidate grid of orbit starts inside A (endpoint-inclusive, nested under
/// the refinement count -> 2*count - 1).
///
/// The mollified mismatch replaces the indicator 1{d > eps} by a piecewise
/// linear ramp on [0.9 eps, eps] (width eps/10), which is what enters
/// variance runs; the raw indicator variant is exposed for reporting only.
struct ShadowingObservables {
  Observable average_distance;                                   // Z_A
  Observable mismatch_mollified;                                 // Z'_{A,eps}
  std::function<double(std::span<const double>)> mismatch_raw;   // not Lipschitz
  std::vector<double> candidates;
  double epsilon = 0.0;
};

using IntervalSet = std::vector<std::pair<double, double>>;

ShadowingObservables shadowing_observables(const MapModel& model,
                                           const UlamMeasure& measure,
                                           const IntervalSet& a_set, std::size_t n,
                                           double epsilon, int y_candidates);

/// Candidate grid used by shadowing_observables, exposed for refinement
/// monotonicity checks and experiment-side augmentation.
std::vector<double> shadowing_candidate_grid(const IntervalSet& a_set, int y_candidates);

/// Z_A against an explicit candidate list (used when augmenting with the
/// orbit's own start point).
double shadowing_average_distance(const MapModel& model, std::span<const double> z,
                                  std::span<const double> candidates);

}  // namespace imlab
