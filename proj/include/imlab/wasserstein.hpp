#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace imlab {

enum class SupportDomain { unit_interval, real_line };

/// Finite weighted point measure. Construction sorts the atoms, merges
/// duplicate locations, drops weights below 1e-15 and normalizes the total
/// mass to one.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution(std::vector<double> locations, std::vector<double> weights,
                        SupportDomain domain);

  /// Equal weights 1/n.
  static EmpiricalDistribution equal_weights(std::vector<double> locations,
                                             SupportDomain domain);
  static EmpiricalDistribution dirac(double location, SupportDomain domain);

  std::size_t size() const { return locs_.size(); }
  std::span<const double> locations() const { return locs_; }
  std::span<const double> weights() const { return weights_; }
  SupportDomain domain() const { return domain_; }
  double total_weight() const;

 private:
  std::vector<double> locs_;     // ascending
  std::vector<double> weights_;  // positive, sums to 1
  SupportDomain domain_;
};

/// Kantorovich (Wasserstein-1) distance, computed exactly as the integral of
/// |F_a - F_b| over the merged support.
double w1_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

/// Independent small-instance oracle: the primal transport cost from the
/// monotone (northwest-corner) matching on sorted atoms, which is optimal in
/// one dimension with |x - y| cost. Capped at 64 atoms per side.
double w1_lp_oracle(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

struct GaussianTarget {
  double mean = 0.0;
  double variance = 0.0;
};

/// Kantorovich distance between a finite point measure and a Gaussian:
/// adaptive quadrature of |F_a - Phi| between atom breakpoints (split at the
/// CDF crossing) plus analytic Gaussian tails. Absolute error <= 1e-8.
/// `quad_points` caps the initial panel count on wide segments.
double w1_to_gaussian(const EmpiricalDistribution& a, const GaussianTarget& g,
                      int quad_points = 8);

/// L1 distance of two nonnegative cellwise-constant densities on a shared grid
/// with the given cell boundaries (sizes: f, g = N; boundaries = N+1).
double tv_distance_density(std::span<const double> f, std::span<const double> g,
                           std::span<const double> boundaries);

}  // namespace imlab
