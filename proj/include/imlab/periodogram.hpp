#pragma once

#include <span>
#include <vector>

#include "imlab/invariant_measure.hpp"

namespace imlab {

/// Machinery for the integrated raw periodogram
///
///   I_n(w) = (1/n) |sum_j e^{-ijw} v_j|^2,
///   J_n(w) = int_0^w I_n(s) ds = c_0 w + 2 sum_k sin(wk)/k c_k
///
/// with c_k the uncentered empirical autocovariances, evaluated on a fixed
/// grid of equispaced frequencies w_g = 2 pi g / omega_count, g = 1..count.
/// Because sin(w_g k) only depends on (g k) mod count, the k-sum folds onto
/// the grid residues and evaluation costs O(n log n + count^2).
class PeriodogramGrid {
 public:
  explicit PeriodogramGrid(int omega_count);

  int size() const { return count_; }
  std::span<const double> omegas() const { return omegas_; }

  /// I_n(omega) by direct complex summation (tests / quadrature oracles).
  static double raw_periodogram(std::span<const double> v, double omega);

  /// J_n on the grid from observable values along one orbit.
  std::vector<double> integrated_periodogram(std::span<const double> v) const;

  /// J_n(omega) for a single frequency via the autocovariance expansion.
  static double integrated_periodogram_at(std::span<const double> v, double omega);

  /// Limit spectral distribution J^v on the grid from a covariance series:
  /// J^v(w) = Cov(0) w + 2 sum_k sin(wk)/k Cov(k).
  std::vector<double> spectral_target(const CovarianceSeries& series) const;

 private:
  int count_;
  std::vector<double> omegas_;     // 2 pi g / count, g = 1..count
  std::vector<double> sin_table_;  // sin(2 pi t / count), t = 0..count-1
};

}  // namespace imlab
