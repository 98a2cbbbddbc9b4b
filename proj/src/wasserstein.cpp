#include "imlab/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "imlab/gaussian.hpp"
#include "imlab/stats.hpp"

namespace imlab {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> locations,
                                             std::vector<double> weights,
                                             SupportDomain domain)
    : domain_(domain) {
  if (locations.size() != weights.size())
    throw std::invalid_argument("EmpiricalDistribution: size mismatch");
  if (locations.empty())
    throw std::invalid_argument("EmpiricalDistribution: no atoms");

  std::vector<std::size_t> order(locations.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return locations[i] < locations[j]; });

  locs_.reserve(locations.size());
  weights_.reserve(locations.size());
  for (std::size_t k : order) {
    const double x = locations[k];
    const double w = weights[k];
    if (!std::isfinite(x))
      throw std::invalid_argument("EmpiricalDistribution: non-finite location");
    if (domain_ == SupportDomain::unit_interval && !(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument("EmpiricalDistribution: location outside [0,1]");
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("EmpiricalDistribution: bad weight");
    if (w < 1e-15) continue;
    if (!locs_.empty() && locs_.back() == x)
      weights_.back() += w;
    else {
      locs_.push_back(x);
      weights_.push_back(w);
    }
  }
  if (locs_.empty())
    throw std::invalid_argument("EmpiricalDistribution: all weights negligible");
  const double total = pairwise_sum(weights_);
  for (double& w : weights_) w /= total;
}

EmpiricalDistribution EmpiricalDistribution::equal_weights(std::vector<double> locations,
                                                           SupportDomain domain) {
  std::vector<double> w(locations.size(), 1.0);
  return EmpiricalDistribution(std::move(locations), std::move(w), domain);
}

EmpiricalDistribution EmpiricalDistribution::dirac(double location, SupportDomain domain) {
  return EmpiricalDistribution({location}, {1.0}, domain);
}

double EmpiricalDistribution::total_weight() const { return pairwise_sum(weights_); }

static void check_normalized(const EmpiricalDistribution& d, const char* where) {
  if (std::abs(d.total_weight() - 1.0) > 1e-12)
    throw std::invalid_argument(std::string(where) + ": measure not normalized");
}

double w1_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  check_normalized(a, "w1_distance");
  check_normalized(b, "w1_distance");
  const auto xa = a.locations(), wa = a.weights();
  const auto xb = b.locations(), wb = b.weights();
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, dist = 0.0;
  double prev = 0.0;
  bool started = false;
  while (i < xa.size() || j < xb.size()) {
    double x;
    if (j >= xb.size() || (i < xa.size() && xa[i] <= xb[j]))
      x = xa[i];
    else
      x = xb[j];
    if (started) dist += std::abs(fa - fb) * (x - prev);
    while (i < xa.size() && xa[i] == x) fa += wa[i++];
    while (j < xb.size() && xb[j] == x) fb += wb[j++];
    prev = x;
    started = true;
  }
  return dist;
}

double w1_lp_oracle(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  check_normalized(a, "w1_lp_oracle");
  check_normalized(b, "w1_lp_oracle");
  if (a.size() > 64 || b.size() > 64)
    throw std::invalid_argument("w1_lp_oracle: instance larger than 64 atoms");
  const auto xa = a.locations(), wa = a.weights();
  const auto xb = b.locations(), wb = b.weights();
  std::size_t i = 0, j = 0;
  double ra = wa[0], rb = wb[0];
  double cost = 0.0;
  while (true) {
    const double move = std::min(ra, rb);
    cost += move * std::abs(xa[i] - xb[j]);
    ra -= move;
    rb -= move;
    if (ra <= 0.0) {
      if (++i >= xa.size()) break;
      ra = wa[i];
    }
    if (rb <= 0.0) {
      if (++j >= xb.size()) break;
      rb = wb[j];
    }
  }
  return cost;
}

namespace {

// Integral of Phi_{m,s}(x) over (-inf, t]; its counterpart for the right tail
// is integral of (1 - Phi) over [t, inf).
double gauss_cdf_left_integral(double t, double m, double s) {
  const double u = (t - m) / s;
  return (t - m) * normal_cdf(u) + s * normal_pdf(u);
}

double gauss_ccdf_right_integral(double t, double m, double s) {
  const double u = (t - m) / s;
  return s * normal_pdf(u) - (t - m) * (1.0 - normal_cdf(u));
}

struct GaussSegment {
  double level;  // constant F_a on the segment
  double m, s;
  double operator()(double x) const { return std::abs(level - normal_cdf((x - m) / s)); }
};

double adaptive_simpson(const GaussSegment& f, double lo, double hi, double flo,
                        double fmid, double fhi, double whole, double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
  const double flm = f(lmid), frm = f(rmid);
  const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
  const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1);
}

double integrate_segment(const GaussSegment& f, double lo, double hi, double tol) {
  if (!(hi > lo)) return 0.0;
  const double mid = 0.5 * (lo + hi);
  const double flo = f(lo), fmid = f(mid), fhi = f(hi);
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  return adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, tol, 28);
}

}  // namespace

double w1_to_gaussian(const EmpiricalDistribution& a, const GaussianTarget& g,
                      int quad_points) {
  check_normalized(a, "w1_to_gaussian");
  if (!(g.variance > 0.0))
    throw std::invalid_argument("w1_to_gaussian: degenerate variance");
  const double s = std::sqrt(g.variance);
  const auto xs = a.locations();
  const auto ws = a.weights();
  const std::size_t n = xs.size();

  double dist = gauss_cdf_left_integral(xs.front(), g.mean, s);
  dist += gauss_ccdf_right_integral(xs.back(), g.mean, s);

  const double tol_piece = 2.5e-9 / static_cast<double>(n + 2);
  double level = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    level += ws[i];
    const double lo = xs[i], hi = xs[i + 1];
    if (!(hi > lo)) continue;
    const GaussSegment seg{level, g.mean, s};
    // Split at the CDF crossing so each piece is smooth and one-signed.
    double cross = g.mean + s * normal_quantile(std::min(std::max(level, 1e-300), 1.0 - 1e-16));
    std::vector<double> cuts;
    cuts.push_back(lo);
    if (cross > lo && cross < hi) cuts.push_back(cross);
    cuts.push_back(hi);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double w = cuts[c + 1] - cuts[c];
      int panels = 1;
      if (w > 0.05 * s)
        panels = std::min<int>(std::max(quad_points, 1),
                               static_cast<int>(w / (0.05 * s)) + 1);
      const double step = w / panels;
      for (int p = 0; p < panels; ++p)
        dist += integrate_segment(seg, cuts[c] + p * step, cuts[c] + (p + 1) * step,
                                  tol_piece / panels);
    }
  }
  return dist;
}

double tv_distance_density(std::span<const double> f, std::span<const double> g,
                           std::span<const double> boundaries) {
  if (f.size() != g.size() || boundaries.size() != f.size() + 1)
    throw std::invalid_argument("tv_distance_density: grid mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    total += std::abs(f[i] - g[i]) * (boundaries[i + 1] - boundaries[i]);
  return total;
}

}  // namespace imlab
