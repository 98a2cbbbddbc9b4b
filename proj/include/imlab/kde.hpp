#pragma once

#include <span>
#include <vector>

#include "imlab/invariant_measure.hpp"

namespace imlab {

enum class KernelType { triangular, epanechnikov };

/// Bounded, nonnegative, Lipschitz kernel with support [-1,1] and integral 1.
struct Kernel {
  KernelType type = KernelType::triangular;

  double value(double u) const;
  double lipschitz() const;        // Lip(psi)
  double total_variation() const;  // int |psi'|
  const char* name() const;
};

/// h_n(s) = (1/(n a)) sum_j psi((s - z_j)/a) at one point (direct sum).
double kde_density_at(std::span<const double> points, const Kernel& kernel,
                      double bandwidth, double s);

/// Exact integral of h_n over the real line, via the same piecewise-quadratic
/// sweep used for the distance (the kernels are polynomial pieces, so the
/// result is exact up to roundoff and should equal one).
double kde_density_integral(std::span<const double> points, const Kernel& kernel,
                            double bandwidth);

/// Exact total-variation distance int |h_n(s) - h(s)| ds against the cellwise
/// constant Ulam density (h = 0 outside [0,1]).
double kde_tv_distance(std::span<const double> points, const Kernel& kernel,
                       double bandwidth, const UlamMeasure& measure);

}  // namespace imlab
