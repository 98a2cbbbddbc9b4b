#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "imlab/map_core.hpp"
#include "imlab/wasserstein.hpp"

namespace imlab {

/// Compressed sparse row matrix; just enough for transfer-operator work.
struct SparseMatrixCsr {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;   // size rows+1
  std::vector<int> col_idx;   // size nnz
  std::vector<double> vals;   // size nnz

  void multiply(std::span<const double> x, std::span<double> y) const;            // y = A x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;  // y = A^T x
  double row_sum(int i) const;
  std::size_t nnz() const { return vals.size(); }
};

enum class GridScheme { uniform, markov_refined };

const char* grid_scheme_name(GridScheme s);

/// Grid discretization of the invariant measure: cell boundaries, stationary
/// cell masses (summing to one) and the cellwise density h = mass / width.
///
/// The markov_refined scheme places boundaries at the Markov points x_l and
/// subdivides each atom uniformly, which resolves the density blow-up
/// h(x) ~ x^{-alpha} near the indifferent fixed point.
struct UlamMeasure {
  double alpha = 0.0;
  GridScheme scheme = GridScheme::uniform;
  std::vector<double> boundaries;     // size N+1, ascending, 0 .. 1
  std::vector<double> masses;         // size N
  std::vector<double> density;        // size N
  std::vector<double> cdf;            // size N, cumulative masses
  std::vector<double> markov_points;  // x_0..x_L for markov_refined, else empty

  int cells() const { return static_cast<int>(masses.size()); }
  double width(int i) const { return boundaries[i + 1] - boundaries[i]; }
  double midpoint(int i) const { return 0.5 * (boundaries[i] + boundaries[i + 1]); }
  int cell_of(double x) const;
  double cdf_at(double x) const;
  double quantile(double p) const;
  double interval_mass(double lo, double hi) const;
  /// Integral of f against the cell-midpoint discretization of mu.
  double integrate(const std::function<double(double)>& f) const;
  /// Grid function f(midpoint_i) for all cells.
  std::vector<double> grid_function(const std::function<double(double)>& f) const;
};

/// Normalized Perron-Frobenius operator on the grid (row-stochastic) plus the
/// raw Ulam cell-transition matrix it was derived from.
///
/// transfer[i][j] = masses[j] * ulam[j][i] / masses[i] is the cell-averaged
/// kernel h(u) / (h(x) |T'(u)|) of the reversed process.
struct UlamOperator {
  SparseMatrixCsr transfer;  // normalized transfer operator, rows sum to 1
  SparseMatrixCsr ulam;      // Ulam matrix of cell-preimage overlap fractions
};

struct UlamSystem {
  UlamMeasure measure;
  UlamOperator op;
  double stationary_residual = 0.0;  // ||P^T pi - pi||_1 at convergence
  int power_iterations = 0;
};

/// Builds the Ulam matrix with exact branch-by-branch preimage overlaps, the
/// stationary masses by power iteration (Cesaro-averaged every 50 steps, the
/// operator has no useful spectral gap), and the normalized operator.
UlamSystem build_ulam(const MapModel& model, int cells, GridScheme scheme);

/// i.i.d. draws from the cell-mass measure (inverse CDF with uniform
/// placement inside a cell). Deterministic given the seed.
std::vector<double> sample_mu(const UlamMeasure& measure, std::size_t count,
                              std::uint64_t seed);
class RngStream;
double sample_mu_point(const UlamMeasure& measure, RngStream& rng);

/// Cross-check sampler: independent Lebesgue-uniform starts iterated
/// `burnin` times under the map.
std::vector<double> sample_mu_burnin(const MapModel& model, std::size_t count,
                                     std::size_t burnin, std::uint64_t seed);

struct CovarianceSeries {
  enum class Method { ulam, monte_carlo };
  std::vector<double> values;  // index = lag, 0 .. lag_max
  Method method = Method::ulam;
  int lag_max() const { return static_cast<int>(values.size()) - 1; }
};

/// Cov_{v,w}(l) = int v.T^l w dmu - int v int w, evaluated on the grid via l
/// applications of the normalized transfer operator.
CovarianceSeries covariance_series(const UlamOperator& op, const UlamMeasure& measure,
                                   std::span<const double> v, std::span<const double> w,
                                   int lag_max);

/// Monte Carlo counterpart along mu-sampled orbits, for cross-checks.
CovarianceSeries covariance_series_mc(const MapModel& model, const UlamMeasure& measure,
                                      const std::function<double(double)>& v,
                                      const std::function<double(double)>& w,
                                      int lag_max, std::size_t samples,
                                      std::uint64_t seed);

struct DecayProbe {
  std::vector<double> values;    // int |L^q (f - int f)| dmu, q = 0 .. q_max
  double fitted_exponent = 0.0;  // log-log slope over the upper lag range
};

DecayProbe operator_l1_decay_probe(const UlamOperator& op, const UlamMeasure& measure,
                                   std::span<const double> f, int q_max);

struct GreenKubo {
  double sigma2 = 0.0;         // truncated sum plus extrapolated tail
  double truncated = 0.0;      // Cov(0) + 2 sum_{l<=L} Cov(l)
  double tail_estimate = 0.0;  // 2 * extrapolated tail mass
  double tail_exponent = 0.0;  // fitted decay exponent beta (Cov ~ l^-beta)
  bool tail_summable = true;   // false when the fitted tail is non-summable
  bool tail_fitted = false;    // false when too few positive lags to fit
};

/// sigma_v^2 = Cov(0) + 2 sum_{l>=1} Cov(l) with a power-law tail fitted on
/// the last decade of lags and integrated analytically.
GreenKubo green_kubo_sigma2(const CovarianceSeries& series);

/// Equal-mass quantile discretization of mu (atom k at the (k-1/2)/count
/// quantile); W1 discretization error is at most 1/(2 count).
EmpiricalDistribution quantile_discretization(const UlamMeasure& measure, int count);

// --- cache serialization ---------------------------------------------------

std::filesystem::path ulam_cache_path(const std::filesystem::path& dir, double alpha,
                                      int cells, GridScheme scheme);
void save_ulam(const UlamSystem& system, const std::filesystem::path& path);
/// Returns nullopt when the file is absent, corrupt (checksum) or describes a
/// different (alpha, N, scheme).
std::optional<UlamSystem> load_ulam(const std::filesystem::path& path, double alpha,
                                    int cells, GridScheme scheme);
/// Cache-aware build.
UlamSystem build_or_load_ulam(const MapModel& model, int cells, GridScheme scheme,
                              const std::filesystem::path& cache_dir);

}  // namespace imlab
