#include "imlab/map_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "imlab/rng.hpp"

namespace imlab {

MapModel::MapModel(double alpha_) : alpha(alpha_), coeff(std::pow(2.0, alpha_)) {
  // alpha = 1 is admitted for closed-form algebra; everything measure-related
  // requires alpha < 1 and checks it separately.
  if (!(alpha_ > 0.0 && alpha_ <= 1.0))
    throw std::invalid_argument("MapModel: alpha must lie in (0,1], got " +
                                std::to_string(alpha_));
}

static void check_domain(double x, const char* where) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error(std::string(where) + ": argument outside [0,1]");
}

double map_eval(const MapModel& model, double x) {
  check_domain(x, "map_eval");
  if (x < MapModel::branch_split) {
    const double y = x + model.coeff * std::pow(x, 1.0 + model.alpha);
    return std::min(y, 1.0);
  }
  return 2.0 * x - 1.0;
}

double map_derivative(const MapModel& model, double x) {
  check_domain(x, "map_derivative");
  if (x < MapModel::branch_split)
    return 1.0 + model.coeff * (1.0 + model.alpha) * std::pow(x, model.alpha);
  return 2.0;
}

double inverse_branch(const MapModel& model, double y, Branch branch) {
  check_domain(y, "inverse_branch");
  if (branch == Branch::right) return 0.5 * (y + 1.0);
  if (y == 0.0) return 0.0;

  // Since z <= y <= z (1 + coeff z^alpha), the root lies in [y/(1+coeff), y].
  // For small y bisect that bracket directly: an absolute bracket would lose
  // all relative precision as the preimages approach the fixed point.
  double lo, hi;
  if (y < 1e-4) {
    lo = y / (1.0 + model.coeff);
    hi = y;
  } else {
    lo = 0.0;
    hi = 0.5;
  }
  const double width_target = y < 1e-4 ? 1e-12 * y : 1e-10;
  while (hi - lo > width_target) {
    const double mid = 0.5 * (lo + hi);
    const double g = mid + model.coeff * std::pow(mid, 1.0 + model.alpha) - y;
    if (g < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double z = 0.5 * (lo + hi);
  const double tol = 1e-14 * y;  // stricter than the absolute 1e-14 for y <= 1
  for (int step = 0; step < 5; ++step) {
    const double g = z + model.coeff * std::pow(z, 1.0 + model.alpha) - y;
    if (std::abs(g) <= tol) break;
    const double dg = 1.0 + model.coeff * (1.0 + model.alpha) * std::pow(z, model.alpha);
    double next = z - g / dg;
    if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);  // stay bracketed
    if (g < 0.0)
      lo = z;
    else
      hi = z;
    z = next;
  }
  if (std::abs(z + model.coeff * std::pow(z, 1.0 + model.alpha) - y) > 1e-14)
    throw std::runtime_error("inverse_branch: left-branch root did not converge");
  return z;
}

MarkovPartition build_partition(const MapModel& model, std::size_t levels) {
  if (levels < 2) throw std::invalid_argument("build_partition: need levels >= 2");
  MarkovPartition p;
  p.points.resize(levels + 1);
  p.points[0] = 1.0;
  p.points[1] = 0.5;
  for (std::size_t l = 2; l <= levels; ++l)
    p.points[l] = inverse_branch(model, p.points[l - 1], Branch::left);
  for (std::size_t l = 1; l <= levels; ++l)
    if (!(p.points[l] < p.points[l - 1]))
      throw std::runtime_error("build_partition: points not strictly decreasing");
  return p;
}

void iterate_orbit_into(const MapModel& model, double x0, std::span<double> out) {
  if (out.empty()) return;
  check_domain(x0, "iterate_orbit");
  double x = x0;
  out[0] = x;
  for (std::size_t j = 1; j < out.size(); ++j) {
    if (x < MapModel::branch_split)
      x = std::min(x + model.coeff * std::pow(x, 1.0 + model.alpha), 1.0);
    else
      x = 2.0 * x - 1.0;
    out[j] = x;
  }
}

OrbitSegment iterate_orbit(const MapModel& model, double x0, std::size_t n) {
  OrbitSegment seg;
  seg.start = x0;
  seg.values.resize(n);
  iterate_orbit_into(model, x0, seg.values);
  return seg;
}

DistortionReport distortion_ratio_check(const MapModel& model,
                                        const MarkovPartition& partition,
                                        int m_max, int samples,
                                        std::uint64_t seed) {
  if (m_max < 1) throw std::invalid_argument("distortion_ratio_check: m_max >= 1");
  const std::size_t max_start_depth =
      std::min<std::size_t>(partition.depth() - 1, 120);
  if (max_start_depth < 13)
    throw std::invalid_argument(
        "distortion_ratio_check: partition too shallow for start atoms");

  DistortionReport report;
  report.m_max = m_max;
  report.c1.assign(m_max, 0.0);
  report.c2.assign(m_max, 0.0);
  report.pair_count.assign(m_max, 0);

  const double inv_alpha = 1.0 / model.alpha;
  for (int s = 0; s < samples; ++s) {
    RngStream rng = derive_stream(seed, "distortion-pair", static_cast<std::uint64_t>(s));
    const std::size_t level = 2 + rng.next_below(max_start_depth - 1);
    const double a = partition.atom_left(level);
    const double w = partition.atom_width(level);
    const double u1 = rng.uniform(0.02, 0.98);
    double u2 = rng.uniform(0.02, 0.98);
    while (std::abs(u1 - u2) < 0.05) u2 = rng.uniform(0.02, 0.98);
    double top = a + u1 * w;      // = T^m(z) for the pair pulled back m times
    double top_t = a + u2 * w;

    // Itinerary mix: the suprema in the lemmas are carried by laminar
    // (left-heavy) branch words, which uniform words stop producing once
    // m exceeds log2(samples); stratify so every m keeps seeing them.
    const double mode = rng.next_double();
    double p_left;
    if (mode < 0.4)
      p_left = 1.0;  // pure laminar pullback
    else if (mode < 0.6)
      p_left = 0.5;  // uniform word
    else
      p_left = rng.uniform(0.7, 1.0);

    double z = top, zt = top_t;
    for (int m = 1; m <= m_max; ++m) {
      const Branch b = rng.next_double() < p_left ? Branch::left : Branch::right;
      z = inverse_branch(model, z, b);
      zt = inverse_branch(model, zt, b);
      const double dz = std::abs(z - zt);
      if (dz < 1e-13) break;  // pair too tight for a trustworthy quotient
      const double dtop = std::abs(top - top_t);
      const double r1 = (dz / z) / (dtop / top);
      const double r2 = dz * std::pow(static_cast<double>(m + 1), inv_alpha) * top / dtop;
      report.c1[m - 1] = std::max(report.c1[m - 1], r1);
      report.c2[m - 1] = std::max(report.c2[m - 1], r2);
      report.pair_count[m - 1] += 1;
    }
  }

  for (int m = 0; m < m_max; ++m)
    if (report.pair_count[m] == 0)
      throw std::runtime_error("distortion_ratio_check: no valid pair at m = " +
                               std::to_string(m + 1));
  return report;
}

}  // namespace imlab
