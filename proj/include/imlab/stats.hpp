#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace imlab {

/// Deterministic pairwise summation: a fixed reduction tree, so the result is
/// independent of how the values were produced (thread count, ordering of
/// writes into the slots).
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty sample");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

/// Unbiased sample variance (two-pass).
inline double sample_variance(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = mean(v);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = v[i] - m;
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(n - 1);
}

/// Quantile with linear interpolation between order statistics.
/// Input must be sorted ascending.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = a + b x.
inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("linear_fit: need at least two matching points");
  const std::size_t n = xs.size();
  const double mx = mean(xs), my = mean(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
  LinearFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_res = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  if (n > 2) f.slope_stderr = std::sqrt(ss_res / (static_cast<double>(n - 2) * sxx));
  return f;
}

/// Log-log power-law fit y = c x^beta over the points with x, y > 0.
/// Returns the fit of log y against log x; `points` counts the ones used.
inline LinearFit power_law_fit(std::span<const double> xs, std::span<const double> ys) {
  std::vector<double> lx, ly;
  lx.reserve(xs.size());
  ly.reserve(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > 0.0 && ys[i] > 0.0) {
      lx.push_back(std::log(xs[i]));
      ly.push_back(std::log(ys[i]));
    }
  }
  if (lx.size() < 2) throw std::invalid_argument("power_law_fit: fewer than two positive points");
  return linear_fit(lx, ly);
}

/// Kolmogorov-Smirnov distance between a sample and a reference CDF.
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    ks = std::max(ks, std::abs((static_cast<double>(i) + 1.0) / n - f));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
  }
  return ks;
}

}  // namespace imlab
