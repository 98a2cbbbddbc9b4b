#include "imlab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "imlab/periodogram.hpp"
#include "imlab/rng.hpp"
#include "imlab/stats.hpp"
#include "imlab/wasserstein.hpp"

namespace imlab {

double Observable::lip_sq_sum() const {
  std::vector<double> sq(lip_bounds.size());
  for (std::size_t j = 0; j < lip_bounds.size(); ++j) sq[j] = lip_bounds[j] * lip_bounds[j];
  return pairwise_sum(sq);
}

namespace {
constexpr double kScales[] = {1e-2, 1e-4, 1e-6};
}

CertificationResult certify_lipschitz(const Observable& obs, int samples,
                                      std::uint64_t seed) {
  CertificationResult result;
  if (obs.lip_bounds.size() != obs.n)
    throw std::invalid_argument("certify_lipschitz: bound count mismatch");
  for (double b : obs.lip_bounds)
    if (!(b > 0.0) || !std::isfinite(b))
      throw std::invalid_argument("certify_lipschitz: bounds must be finite and positive");

  std::vector<double> ratios(obs.n, 0.0);
  std::vector<bool> scanned(obs.n, false);
  std::vector<double> z(obs.n);
  for (int s = 0; s < samples; ++s) {
    RngStream rng = derive_stream(seed, "lip-cert", static_cast<std::uint64_t>(s));
    for (std::size_t j = 0; j < obs.n; ++j) z[j] = rng.next_double();
    const std::size_t j = rng.next_below(obs.n);
    const double base = obs.evaluate(z);
    const double keep = z[j];
    for (double scale : kScales) {
      const double delta = rng.next_bool() ? scale : -scale;
      const double moved = std::min(std::max(keep + delta, 0.0), 1.0);
      const double dz = std::abs(moved - keep);
      if (dz < 1e-12) continue;
      z[j] = moved;
      const double perturbed = obs.evaluate(z);
      z[j] = keep;
      const double dk = std::abs(perturbed - base);
      const double ratio = dk / (obs.lip_bounds[j] * dz);
      scanned[j] = true;
      ratios[j] = std::max(ratios[j], ratio);
      if (ratio > result.worst_ratio) {
        result.worst_ratio = ratio;
        result.worst_coordinate = j;
        result.worst_delta = dz;
      }
      const double slack = 1e-10 * (1.0 + std::abs(base));
      if (dk > obs.lip_bounds[j] * dz * (1.0 + 1e-8) + slack) {
        result.passed = false;
        result.message = "coordinate " + std::to_string(j) + " of '" + obs.label +
                         "': |dK| = " + std::to_string(dk) + " exceeds bound " +
                         std::to_string(obs.lip_bounds[j]) + " * " + std::to_string(dz);
      }
    }
  }
  for (std::size_t j = 0; j < obs.n; ++j)
    if (scanned[j]) result.per_coordinate.emplace_back(j, ratios[j]);
  return result;
}

double finite_difference_lip_scan(
    const std::function<double(std::span<const double>)>& eval, std::size_t n,
    int samples, std::uint64_t seed) {
  std::vector<double> z(n);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    RngStream rng = derive_stream(seed, "lip-scan", static_cast<std::uint64_t>(s));
    for (std::size_t j = 0; j < n; ++j) z[j] = rng.next_double();
    const std::size_t j = rng.next_below(n);
    const double base = eval(z);
    const double keep = z[j];
    for (double scale : kScales) {
      const double delta = rng.next_bool() ? scale : -scale;
      const double moved = std::min(std::max(keep + delta, 0.0), 1.0);
      const double dz = std::abs(moved - keep);
      if (dz < 1e-12) continue;
      z[j] = moved;
      const double perturbed = eval(z);
      z[j] = keep;
      worst = std::max(worst, std::abs(perturbed - base) / dz);
    }
  }
  return worst;
}

Observable birkhoff_observable(std::function<double(double)> v, double lip_v,
                               std::size_t n, BirkhoffNormalization norm,
                               std::string label) {
  if (n == 0) throw std::invalid_argument("birkhoff_observable: n >= 1");
  double divisor = 1.0;
  if (norm == BirkhoffNormalization::sqrt_n) divisor = std::sqrt(static_cast<double>(n));
  if (norm == BirkhoffNormalization::n) divisor = static_cast<double>(n);
  Observable obs;
  obs.label = std::move(label);
  obs.n = n;
  obs.lip_bounds.assign(n, lip_v / divisor);
  obs.evaluate = [v = std::move(v), divisor](std::span<const double> z) {
    std::vector<double> terms(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) terms[j] = v(z[j]);
    return pairwise_sum(terms) / divisor;
  };
  return obs;
}

Observable empirical_w1_observable(const UlamMeasure& measure, std::size_t n,
                                   int quantile_atoms) {
  if (n == 0) throw std::invalid_argument("empirical_w1_observable: n >= 1");
  auto target = std::make_shared<EmpiricalDistribution>(
      quantile_discretization(measure, quantile_atoms));
  Observable obs;
  obs.label = "empirical_w1";
  obs.n = n;
  obs.lip_bounds.assign(n, 1.0 / static_cast<double>(n));
  obs.evaluate = [target](std::span<const double> z) {
    std::vector<double> locs(z.begin(), z.end());
    const auto empirical =
        EmpiricalDistribution::equal_weights(std::move(locs), SupportDomain::unit_interval);
    return w1_distance(empirical, *target);
  };
  return obs;
}

Observable kde_tv_observable(const UlamMeasure& measure, Kernel kernel, double bandwidth,
                             std::size_t n, const KdeLipScan& scan) {
  if (!(bandwidth > 0.0 && bandwidth < 1.0))
    throw std::invalid_argument("kde_tv_observable: bandwidth must lie in (0,1)");
  if (n == 0) throw std::invalid_argument("kde_tv_observable: n >= 1");
  auto mu = std::make_shared<UlamMeasure>(measure);
  auto eval = [mu, kernel, bandwidth](std::span<const double> z) {
    return kde_tv_distance(z, kernel, bandwidth, *mu);
  };
  const double raw = finite_difference_lip_scan(eval, n, scan.samples, scan.seed);
  const double declared = scan.safety * raw;
  if (!(declared > 0.0))
    throw std::runtime_error("kde_tv_observable: sensitivity scan returned zero");
  Observable obs;
  obs.label = std::string("kde_tv_") + kernel.name();
  obs.n = n;
  obs.lip_bounds.assign(n, declared);
  obs.evaluate = std::move(eval);
  return obs;
}

Observable periodogram_sup_observable(std::function<double(double)> v, double lip_v,
                                      double sup_v, std::size_t n, int omega_count,
                                      const CovarianceSeries& covariance) {
  if (n == 0) throw std::invalid_argument("periodogram_sup_observable: n >= 1");
  if (covariance.values.empty())
    throw std::invalid_argument("periodogram_sup_observable: missing covariance series");
  auto grid = std::make_shared<PeriodogramGrid>(omega_count);
  auto target = std::make_shared<std::vector<double>>(grid->spectral_target(covariance));
  Observable obs;
  obs.label = "periodogram_sup";
  obs.n = n;
  obs.lip_bounds.assign(n, 4.0 * std::numbers::pi * sup_v * lip_v);
  obs.evaluate = [grid, target, v = std::move(v)](std::span<const double> z) {
    std::vector<double> values(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) values[j] = v(z[j]);
    const std::vector<double> jn = grid->integrated_periodogram(values);
    double sup = 0.0;
    for (std::size_t g = 0; g < jn.size(); ++g)
      sup = std::max(sup, std::abs(jn[g] - (*target)[g]));
    return sup;
  };
  return obs;
}

std::vector<double> shadowing_candidate_grid(const IntervalSet& a_set, int y_candidates) {
  if (a_set.empty()) throw std::invalid_argument("shadowing: empty candidate set A");
  double total = 0.0;
  for (const auto& [lo, hi] : a_set) {
    if (!(hi > lo) || lo < 0.0 || hi > 1.0)
      throw std::invalid_argument("shadowing: A must be a union of intervals in [0,1]");
    total += hi - lo;
  }
  if (y_candidates < static_cast<int>(a_set.size()))
    throw std::invalid_argument("shadowing: fewer candidates than intervals");
  std::vector<double> grid;
  grid.reserve(y_candidates);
  int assigned = 0;
  for (std::size_t i = 0; i < a_set.size(); ++i) {
    const auto& [lo, hi] = a_set[i];
    int count = i + 1 == a_set.size()
                    ? y_candidates - assigned
                    : std::max(1, static_cast<int>(std::round(y_candidates * (hi - lo) / total)));
    assigned += count;
    if (count == 1) {
      grid.push_back(0.5 * (lo + hi));
      continue;
    }
    for (int k = 0; k < count; ++k)
      grid.push_back(lo + (hi - lo) * static_cast<double>(k) / (count - 1));
  }
  return grid;
}

namespace {

struct CandidateOrbits {
  std::size_t n = 0;
  std::vector<double> flat;  // candidate-major
  std::span<const double> orbit(std::size_t c) const { return {flat.data() + c * n, n}; }
  std::size_t count() const { return n == 0 ? 0 : flat.size() / n; }
};

std::shared_ptr<CandidateOrbits> precompute_orbits(const MapModel& model,
                                                   std::span<const double> candidates,
                                                   std::size_t n) {
  auto orbits = std::make_shared<CandidateOrbits>();
  orbits->n = n;
  orbits->flat.resize(candidates.size() * n);
  for (std::size_t c = 0; c < candidates.size(); ++c)
    iterate_orbit_into(model, candidates[c], {orbits->flat.data() + c * n, n});
  return orbits;
}

double min_average_distance(const CandidateOrbits& orbits, std::span<const double> z) {
  const std::size_t n = z.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < orbits.count(); ++c) {
    const double* orb = orbits.flat.data() + c * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += std::abs(z[j] - orb[j]);
      if (acc >= best) break;
    }
    best = std::min(best, acc);
  }
  return best / static_cast<double>(n);
}

}  // namespace

double shadowing_average_distance(const MapModel& model, std::span<const double> z,
                                  std::span<const double> candidates) {
  const auto orbits = precompute_orbits(model, candidates, z.size());
  return min_average_distance(*orbits, z);
}

ShadowingObservables shadowing_observables(const MapModel& model,
                                           const UlamMeasure& measure,
                                           const IntervalSet& a_set, std::size_t n,
                                           double epsilon, int y_candidates) {
  if (n == 0) throw std::invalid_argument("shadowing_observables: n >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("shadowing_observables: epsilon > 0");
  double mass = 0.0;
  for (const auto& [lo, hi] : a_set) mass += measure.interval_mass(lo, hi);
  if (!(mass > 0.0))
    throw std::invalid_argument("shadowing_observables: A has zero measure");

  ShadowingObservables result;
  result.epsilon = epsilon;
  result.candidates = shadowing_candidate_grid(a_set, y_candidates);
  auto orbits = precompute_orbits(model, result.candidates, n);

  result.average_distance.label = "shadowing_z";
  result.average_distance.n = n;
  result.average_distance.lip_bounds.assign(n, 1.0 / static_cast<double>(n));
  result.average_distance.evaluate = [orbits](std::span<const double> z) {
    return min_average_distance(*orbits, z);
  };

  // Mollified mismatch indicator: linear ramp from 0 at 0.9 eps to 1 at eps.
  const double ramp = epsilon / 10.0;
  result.mismatch_mollified.label = "shadowing_mismatch";
  result.mismatch_mollified.n = n;
  result.mismatch_mollified.lip_bounds.assign(n, 10.0 / (epsilon * static_cast<double>(n)));
  result.mismatch_mollified.evaluate = [orbits, epsilon, ramp](std::span<const double> z) {
    const std::size_t n_ = z.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < orbits->count(); ++c) {
      const double* orb = orbits->flat.data() + c * n_;
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        const double d = std::abs(z[j] - orb[j]);
        if (d >= epsilon)
          acc += 1.0;
        else if (d > epsilon - ramp)
          acc += (d - (epsilon - ramp)) / ramp;
        if (acc >= best) break;
      }
      best = std::min(best, acc);
    }
    return best / static_cast<double>(n_);
  };

  result.mismatch_raw = [orbits, epsilon](std::span<const double> z) {
    const std::size_t n_ = z.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < orbits->count(); ++c) {
      const double* orb = orbits->flat.data() + c * n_;
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (std::abs(z[j] - orb[j]) > epsilon) acc += 1.0;
        if (acc >= best) break;
      }
      best = std::min(best, acc);
    }
    return best / static_cast<double>(n_);
  };
  return result;
}

}  // namespace imlab
