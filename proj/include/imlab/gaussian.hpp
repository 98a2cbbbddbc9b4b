#pragma once

namespace imlab {

/// Standard normal CDF, |error| < 1e-15 (complementary error function route).
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal quantile. Acklam's rational approximation polished by one
/// Halley step against normal_cdf; absolute error well below 1e-12 on the
/// open unit interval. Throws std::domain_error for p outside (0, 1).
double normal_quantile(double p);

}  // namespace imlab
