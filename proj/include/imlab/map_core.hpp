#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace imlab {

/// The intermittent interval map
///
///   T(x) = x + 2^alpha * x^(1+alpha)   on [0, 1/2)
///   T(x) = 2x - 1                      on [1/2, 1]
///
/// with intermittency exponent alpha in (0, 1). The left branch has an
/// indifferent fixed point at 0 (T'(0) = 1); the right branch is affine,
/// expanding and onto, which makes the preimage partition of 1/2 Markov.
struct MapModel {
  double alpha;
  double coeff;  // 2^alpha, cached
  static constexpr double branch_split = 0.5;

  explicit MapModel(double alpha_);
};

/// T(x). Throws std::domain_error outside [0,1]; the result is clamped to [0,1].
double map_eval(const MapModel& model, double x);

/// |T'(x)|, one-sided from the left at the branch point. Always >= 1.
double map_derivative(const MapModel& model, double x);

enum class Branch { left, right };

/// The unique preimage of y under the chosen branch.
///
/// Left branch: bisection to width 1e-10 followed by Newton polish until
/// |T(z) - y| <= 1e-14 (bisection alone keeps the iterate inside [0, 1/2),
/// Newton alone may escape near 0). Throws std::runtime_error if the
/// tolerance is not reached.
double inverse_branch(const MapModel& model, double y, Branch branch);

/// Preimage points x_0 = 1 > x_1 = 1/2 > x_2 > ... of the branch point:
/// T(x_l) = x_{l-1} for l >= 2. The half-open intervals I_l = (x_{l+1}, x_l]
/// form a Markov partition of (0, 1].
struct MarkovPartition {
  std::vector<double> points;  // size L+1, descending, points[0] = 1

  std::size_t depth() const { return points.size() - 1; }
  double atom_left(std::size_t l) const { return points[l + 1]; }   // open end
  double atom_right(std::size_t l) const { return points[l]; }      // closed end
  double atom_width(std::size_t l) const { return points[l] - points[l + 1]; }
};

MarkovPartition build_partition(const MapModel& model, std::size_t levels);

struct OrbitSegment {
  double start = 0.0;
  std::vector<double> values;  // T^0(x), ..., T^{n-1}(x)
};

OrbitSegment iterate_orbit(const MapModel& model, double x0, std::size_t n);

/// Fills `out` with T^0(x0), ..., T^{n-1}(x0); allocation-free hot path.
void iterate_orbit_into(const MapModel& model, double x0, std::span<double> out);

/// Empirical suprema for the two distortion inequalities, estimated over
/// sampled pairs whose first m iterates share Markov atoms by construction
/// (both points are pulled back through the same inverse-branch word, which
/// keeps them in a common atom at every level).
///
/// c1[m-1]: sup of (|z - zt|/z) / (|T^m z - T^m zt| / T^m z)
/// c2[m-1]: sup of |z - zt| (m+1)^{1/alpha} T^m z / |T^m z - T^m zt|
struct DistortionReport {
  int m_max = 0;
  std::vector<double> c1;
  std::vector<double> c2;
  std::vector<std::size_t> pair_count;  // accepted pairs per m
};

DistortionReport distortion_ratio_check(const MapModel& model,
                                        const MarkovPartition& partition,
                                        int m_max, int samples,
                                        std::uint64_t seed);

}  // namespace imlab
