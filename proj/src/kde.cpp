#include "imlab/kde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace imlab {

double Kernel::value(double u) const {
  const double t = std::abs(u);
  if (t >= 1.0) return 0.0;
  if (type == KernelType::triangular) return 1.0 - t;
  return 0.75 * (1.0 - t * t);
}

double Kernel::lipschitz() const {
  return type == KernelType::triangular ? 1.0 : 1.5;
}

double Kernel::total_variation() const {
  return type == KernelType::triangular ? 2.0 : 1.5;
}

const char* Kernel::name() const {
  return type == KernelType::triangular ? "triangular" : "epanechnikov";
}

double kde_density_at(std::span<const double> points, const Kernel& kernel,
                      double bandwidth, double s) {
  if (!(bandwidth > 0.0 && bandwidth < 1.0))
    throw std::invalid_argument("kde: bandwidth must lie in (0,1)");
  double acc = 0.0;
  for (double z : points) acc += kernel.value((s - z) / bandwidth);
  return acc / (static_cast<double>(points.size()) * bandwidth);
}

namespace {

struct Event {
  double pos;
  double d0, d1, d2;  // quadratic coefficient jumps of h_n
  double dh;          // jump of the reference density
};

struct Kahan {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// Events for one kernel bump at z: the bump is piecewise polynomial in s, so
// it enters the sweep as coefficient jumps at its breakpoints.
void push_kernel_events(std::vector<Event>& events, const Kernel& kernel, double z,
                        double a, double q) {
  if (kernel.type == KernelType::triangular) {
    const double slope = q / a;
    events.push_back({z - a, q * (1.0 - z / a), slope, 0.0, 0.0});
    events.push_back({z, 2.0 * q * z / a, -2.0 * slope, 0.0, 0.0});
    events.push_back({z + a, -q * (1.0 + z / a), slope, 0.0, 0.0});
  } else {
    const double c2 = -0.75 * q / (a * a);
    const double c1 = 1.5 * q * z / (a * a);
    const double c0 = 0.75 * q * (1.0 - z * z / (a * a));
    events.push_back({z - a, c0, c1, c2, 0.0});
    events.push_back({z + a, -c0, -c1, -c2, 0.0});
  }
}

// Integral of |c0 + c1 s + c2 s^2 - h| over [s0, s1], splitting at the real
// roots inside the interval.
double abs_quadratic_integral(double c0, double c1, double c2, double h, double s0,
                              double s1) {
  const double a0 = c0 - h;
  double roots[2];
  int root_count = 0;
  if (std::abs(c2) > 1e-300) {
    const double disc = c1 * c1 - 4.0 * c2 * a0;
    if (disc > 0.0) {
      const double sq = std::sqrt(disc);
      const double qq = -0.5 * (c1 + (c1 >= 0.0 ? sq : -sq));
      const double r1 = qq / c2;
      const double r2 = qq != 0.0 ? a0 / qq : r1;
      roots[root_count++] = std::min(r1, r2);
      roots[root_count++] = std::max(r1, r2);
    }
  } else if (std::abs(c1) > 1e-300) {
    roots[root_count++] = -a0 / c1;
  }

  double cuts[4] = {s0, s1, s1, s1};
  int n_cuts = 1;
  for (int r = 0; r < root_count; ++r)
    if (roots[r] > s0 && roots[r] < s1) cuts[n_cuts++] = roots[r];
  cuts[n_cuts++] = s1;
  std::sort(cuts, cuts + n_cuts);

  const auto anti = [&](double s) {
    return s * (a0 + s * (0.5 * c1 + s * (c2 / 3.0)));
  };
  double acc = 0.0;
  for (int k = 0; k + 1 < n_cuts; ++k) {
    const double u0 = cuts[k], u1 = cuts[k + 1];
    if (!(u1 > u0)) continue;
    const double mid = 0.5 * (u0 + u1);
    const double val = a0 + mid * (c1 + mid * c2);
    const double piece = anti(u1) - anti(u0);
    acc += val >= 0.0 ? piece : -piece;
  }
  return acc;
}

double sweep(std::span<const double> points, const Kernel& kernel, double bandwidth,
             const UlamMeasure* measure, bool absolute) {
  if (!(bandwidth > 0.0 && bandwidth < 1.0))
    throw std::invalid_argument("kde: bandwidth must lie in (0,1)");
  if (points.empty()) throw std::invalid_argument("kde: empty point set");

  const double q = 1.0 / (static_cast<double>(points.size()) * bandwidth);
  std::vector<Event> events;
  events.reserve(points.size() * 3 + (measure ? measure->boundaries.size() : 0) + 2);
  for (double z : points) push_kernel_events(events, kernel, z, bandwidth, q);
  if (measure) {
    double prev = 0.0;
    for (int i = 0; i < measure->cells(); ++i) {
      events.push_back({measure->boundaries[i], 0.0, 0.0, 0.0, measure->density[i] - prev});
      prev = measure->density[i];
    }
    events.push_back({measure->boundaries.back(), 0.0, 0.0, 0.0, -prev});
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.pos < b.pos; });

  Kahan c0, c1, c2, h;
  double acc = 0.0;
  for (std::size_t k = 0; k < events.size(); ++k) {
    c0.add(events[k].d0);
    c1.add(events[k].d1);
    c2.add(events[k].d2);
    h.add(events[k].dh);
    if (k + 1 == events.size()) break;
    const double s0 = events[k].pos, s1 = events[k + 1].pos;
    if (!(s1 > s0)) continue;
    if (absolute)
      acc += abs_quadratic_integral(c0.sum, c1.sum, c2.sum, h.sum, s0, s1);
    else
      acc += (c0.sum - h.sum) * (s1 - s0) +
             0.5 * c1.sum * (s1 * s1 - s0 * s0) +
             c2.sum * (s1 * s1 * s1 - s0 * s0 * s0) / 3.0;
  }
  return acc;
}

}  // namespace

double kde_density_integral(std::span<const double> points, const Kernel& kernel,
                            double bandwidth) {
  return sweep(points, kernel, bandwidth, nullptr, false);
}

double kde_tv_distance(std::span<const double> points, const Kernel& kernel,
                       double bandwidth, const UlamMeasure& measure) {
  return sweep(points, kernel, bandwidth, &measure, true);
}

}  // namespace imlab
