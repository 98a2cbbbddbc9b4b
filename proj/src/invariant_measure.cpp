#include "imlab/invariant_measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "imlab/rng.hpp"
#include "imlab/stats.hpp"

namespace imlab {

// --- sparse matrix ----------------------------------------------------------

void SparseMatrixCsr::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != cols || static_cast<int>(y.size()) != rows)
    throw std::invalid_argument("SparseMatrixCsr::multiply: size mismatch");
  for (int i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += vals[k] * x[col_idx[k]];
    y[i] = acc;
  }
}

void SparseMatrixCsr::multiply_transpose(std::span<const double> x,
                                         std::span<double> y) const {
  if (static_cast<int>(x.size()) != rows || static_cast<int>(y.size()) != cols)
    throw std::invalid_argument("SparseMatrixCsr::multiply_transpose: size mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (int i = 0; i < rows; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) y[col_idx[k]] += vals[k] * x[i];
}

double SparseMatrixCsr::row_sum(int i) const {
  double acc = 0.0;
  for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += vals[k];
  return acc;
}

const char* grid_scheme_name(GridScheme s) {
  return s == GridScheme::uniform ? "uniform" : "markov_refined";
}

// --- measure helpers --------------------------------------------------------

int UlamMeasure::cell_of(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("UlamMeasure::cell_of");
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), x);
  int i = static_cast<int>(it - boundaries.begin()) - 1;
  if (i < 0) i = 0;
  if (i >= cells()) i = cells() - 1;
  return i;
}

double UlamMeasure::cdf_at(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const int i = cell_of(x);
  const double below = i > 0 ? cdf[i - 1] : 0.0;
  const double w = width(i);
  return below + (w > 0.0 ? masses[i] * (x - boundaries[i]) / w : 0.0);
}

double UlamMeasure::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("UlamMeasure::quantile");
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
  if (it == cdf.end()) return 1.0;
  const int i = static_cast<int>(it - cdf.begin());
  const double below = i > 0 ? cdf[i - 1] : 0.0;
  const double m = masses[i];
  const double frac = m > 0.0 ? (p - below) / m : 0.0;
  return boundaries[i] + std::min(std::max(frac, 0.0), 1.0) * width(i);
}

double UlamMeasure::interval_mass(double lo, double hi) const {
  if (hi <= lo) return 0.0;
  return cdf_at(std::min(hi, 1.0)) - cdf_at(std::max(lo, 0.0));
}

double UlamMeasure::integrate(const std::function<double(double)>& f) const {
  std::vector<double> terms(masses.size());
  for (int i = 0; i < cells(); ++i) terms[i] = masses[i] * f(midpoint(i));
  return pairwise_sum(terms);
}

std::vector<double> UlamMeasure::grid_function(
    const std::function<double(double)>& f) const {
  std::vector<double> g(masses.size());
  for (int i = 0; i < cells(); ++i) g[i] = f(midpoint(i));
  return g;
}

// --- grid construction ------------------------------------------------------

namespace {

std::pair<std::vector<double>, std::vector<double>> make_grid(const MapModel& model,
                                                              int cells,
                                                              GridScheme scheme) {
  std::vector<double> boundaries;
  std::vector<double> markov_points;
  if (scheme == GridScheme::uniform) {
    boundaries.resize(cells + 1);
    for (int i = 0; i <= cells; ++i)
      boundaries[i] = static_cast<double>(i) / static_cast<double>(cells);
    boundaries.back() = 1.0;
    return {std::move(boundaries), std::move(markov_points)};
  }

  // markov_refined: one region per Markov atom I_0..I_{L-1} plus the residual
  // interval [0, x_L]; each region is split uniformly into `per_region`
  // subcells, with the remainder cells assigned to the widest region I_0.
  constexpr int per_region = 16;
  const int regions = cells / per_region;
  if (regions < 3)
    throw std::invalid_argument("build_ulam: markov_refined needs at least 48 cells");
  const int remainder = cells - regions * per_region;
  const int depth = regions - 1;  // atoms I_0 .. I_{depth-1}, tail [0, x_depth]

  const MarkovPartition partition = build_partition(model, depth);
  markov_points = partition.points;

  boundaries.reserve(cells + 1);
  boundaries.push_back(0.0);
  // ascending: tail region first, then atoms from deepest to I_0
  const double x_tail = partition.points[depth];
  for (int k = 1; k < per_region; ++k)
    boundaries.push_back(x_tail * k / per_region);
  boundaries.push_back(x_tail);
  for (int l = depth - 1; l >= 0; --l) {
    const double lo = partition.points[l + 1];
    const double hi = partition.points[l];
    const int sub = l == 0 ? per_region + remainder : per_region;
    for (int k = 1; k < sub; ++k)
      boundaries.push_back(lo + (hi - lo) * k / sub);
    boundaries.push_back(hi);
  }
  boundaries.back() = 1.0;
  if (static_cast<int>(boundaries.size()) != cells + 1)
    throw std::logic_error("make_grid: cell count mismatch");
  return {std::move(boundaries), std::move(markov_points)};
}

// Exact cell-preimage overlap masses, branch by branch. For a source cell
// [a,b) and each monotone branch, the image [T(a'), T(b')) is intersected
// with the target cells and pulled back through the branch inverse, so every
// entry is an exact interval length (no sampling).
SparseMatrixCsr build_ulam_matrix(const MapModel& model,
                                  const std::vector<double>& boundaries) {
  const int n = static_cast<int>(boundaries.size()) - 1;
  SparseMatrixCsr m;
  m.rows = m.cols = n;
  m.row_ptr.assign(n + 1, 0);

  const auto eval_left = [&](double x) {
    return std::min(x + model.coeff * std::pow(x, 1.0 + model.alpha), 1.0);
  };
  const auto eval_right = [](double x) { return 2.0 * x - 1.0; };

  std::vector<std::pair<int, double>> row;
  for (int i = 0; i < n; ++i) {
    row.clear();
    const double a = boundaries[i], b = boundaries[i + 1];
    for (int branch = 0; branch < 2; ++branch) {
      const bool left = branch == 0;
      const double dom_lo = left ? 0.0 : 0.5;
      const double dom_hi = left ? 0.5 : 1.0;
      const double a1 = std::max(a, dom_lo);
      const double b1 = std::min(b, dom_hi);
      if (!(b1 > a1)) continue;
      const double ya = left ? eval_left(a1) : eval_right(a1);
      const double yb = left ? eval_left(b1) : eval_right(b1);
      if (!(yb > ya)) continue;

      int j = static_cast<int>(std::upper_bound(boundaries.begin(), boundaries.end(), ya) -
                               boundaries.begin()) - 1;
      j = std::clamp(j, 0, n - 1);
      double z_lo = a1;
      while (j < n && boundaries[j] < yb) {
        const double c_hi = boundaries[j + 1];
        double z_hi;
        if (c_hi >= yb)
          z_hi = b1;
        else
          z_hi = left ? inverse_branch(model, c_hi, Branch::left)
                      : 0.5 * (c_hi + 1.0);
        if (z_hi > z_lo) row.emplace_back(j, z_hi - z_lo);
        z_lo = std::max(z_lo, z_hi);
        ++j;
      }
    }
    std::sort(row.begin(), row.end());
    double total = 0.0;
    for (const auto& [j, w] : row) total += w;
    if (total <= 0.0)
      throw std::runtime_error("build_ulam: empty row " + std::to_string(i));
    int prev = -1;
    for (const auto& [j, w] : row) {
      if (j == prev)
        m.vals.back() += w / total;
      else {
        m.col_idx.push_back(j);
        m.vals.push_back(w / total);
        prev = j;
      }
    }
    m.row_ptr[i + 1] = static_cast<int>(m.col_idx.size());
  }
  return m;
}

struct StationaryResult {
  std::vector<double> pi;
  double residual = 0.0;
  int iterations = 0;
};

double l1_diff(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

void normalize_l1(std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  for (double& x : v) x /= total;
}

// Left eigenvector of the Ulam matrix by power iteration. A Cesaro average
// over each 50-step block is adopted whenever it has the smaller residual,
// which damps the slowly rotating modes near the unit circle.
StationaryResult stationary_masses(const SparseMatrixCsr& ulam,
                                   const std::vector<double>& boundaries,
                                   double alpha) {
  const int n = ulam.rows;
  std::vector<double> pi(n), next(n), block_sum(n, 0.0), avg(n), avg_next(n);
  for (int i = 0; i < n; ++i) {
    const double w = boundaries[i + 1] - boundaries[i];
    const double mid = 0.5 * (boundaries[i] + boundaries[i + 1]);
    pi[i] = w * std::pow(std::max(mid, 1e-300), -alpha);
  }
  normalize_l1(pi);

  constexpr double target = 1e-11;
  constexpr int max_iterations = 500000;
  constexpr int block = 50;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  int in_block = 0;
  while (it < max_iterations) {
    ulam.multiply_transpose(pi, next);
    residual = l1_diff(pi, next);
    pi.swap(next);
    ++it;
    for (int i = 0; i < n; ++i) block_sum[i] += pi[i];
    if (++in_block == block) {
      avg = block_sum;
      normalize_l1(avg);
      ulam.multiply_transpose(avg, avg_next);
      const double avg_residual = l1_diff(avg, avg_next);
      if (avg_residual < residual) {
        pi = avg;
        residual = avg_residual;
      }
      std::fill(block_sum.begin(), block_sum.end(), 0.0);
      in_block = 0;
      normalize_l1(pi);
    }
    if (residual <= target) break;
  }
  if (residual > 1e-10)
    throw std::runtime_error("build_ulam: power iteration did not reach residual 1e-10 (got " +
                             std::to_string(residual) + ")");
  normalize_l1(pi);
  StationaryResult r;
  r.pi = std::move(pi);
  r.residual = residual;
  r.iterations = it;
  return r;
}

// transfer[i][j] = pi_j P[j][i] / pi_i, rows normalized to sum exactly one.
SparseMatrixCsr build_transfer(const SparseMatrixCsr& ulam,
                               const std::vector<double>& pi) {
  const int n = ulam.rows;
  SparseMatrixCsr t;
  t.rows = t.cols = n;
  t.row_ptr.assign(n + 1, 0);
  for (int j = 0; j < n; ++j)
    for (int k = ulam.row_ptr[j]; k < ulam.row_ptr[j + 1]; ++k)
      t.row_ptr[ulam.col_idx[k] + 1] += 1;
  for (int i = 0; i < n; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col_idx.assign(t.row_ptr.back(), 0);
  t.vals.assign(t.row_ptr.back(), 0.0);
  std::vector<int> fill(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int j = 0; j < n; ++j)
    for (int k = ulam.row_ptr[j]; k < ulam.row_ptr[j + 1]; ++k) {
      const int i = ulam.col_idx[k];
      t.col_idx[fill[i]] = j;
      t.vals[fill[i]] = pi[j] * ulam.vals[k];
      ++fill[i];
    }
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    for (int k = t.row_ptr[i]; k < t.row_ptr[i + 1]; ++k) total += t.vals[k];
    if (total > 0.0)
      for (int k = t.row_ptr[i]; k < t.row_ptr[i + 1]; ++k) t.vals[k] /= total;
  }
  return t;
}

}  // namespace

UlamSystem build_ulam(const MapModel& model, int cells, GridScheme scheme) {
  if (cells < 64) throw std::invalid_argument("build_ulam: need at least 64 cells");
  if (!(model.alpha < 1.0))
    throw std::invalid_argument(
        "build_ulam: the invariant density is integrable only for alpha < 1");
  auto [boundaries, markov_points] = make_grid(model, cells, scheme);

  UlamSystem sys;
  sys.op.ulam = build_ulam_matrix(model, boundaries);
  StationaryResult st = stationary_masses(sys.op.ulam, boundaries, model.alpha);
  sys.op.transfer = build_transfer(sys.op.ulam, st.pi);
  sys.stationary_residual = st.residual;
  sys.power_iterations = st.iterations;

  UlamMeasure& m = sys.measure;
  m.alpha = model.alpha;
  m.scheme = scheme;
  m.boundaries = std::move(boundaries);
  m.masses = std::move(st.pi);
  m.markov_points = std::move(markov_points);
  m.density.resize(m.masses.size());
  m.cdf.resize(m.masses.size());
  double acc = 0.0;
  for (int i = 0; i < m.cells(); ++i) {
    const double w = m.width(i);
    m.density[i] = w > 0.0 ? m.masses[i] / w : 0.0;
    acc += m.masses[i];
    m.cdf[i] = acc;
  }
  m.cdf.back() = 1.0;
  return sys;
}

// --- sampling ---------------------------------------------------------------

double sample_mu_point(const UlamMeasure& measure, RngStream& rng) {
  return measure.quantile(rng.next_double());
}

std::vector<double> sample_mu(const UlamMeasure& measure, std::size_t count,
                              std::uint64_t seed) {
  RngStream rng = derive_stream(seed, "sample-mu");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = sample_mu_point(measure, rng);
  return out;
}

std::vector<double> sample_mu_burnin(const MapModel& model, std::size_t count,
                                     std::size_t burnin, std::uint64_t seed) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng = derive_stream(seed, "sample-mu-burnin", i);
    double x = rng.next_double();
    for (std::size_t j = 0; j < burnin; ++j) x = map_eval(model, x);
    out[i] = x;
  }
  return out;
}

// --- covariance and decay ---------------------------------------------------

CovarianceSeries covariance_series(const UlamOperator& op, const UlamMeasure& measure,
                                   std::span<const double> v, std::span<const double> w,
                                   int lag_max) {
  const int n = measure.cells();
  if (static_cast<int>(v.size()) != n || static_cast<int>(w.size()) != n)
    throw std::invalid_argument("covariance_series: grid function size mismatch");
  if (lag_max < 0) throw std::invalid_argument("covariance_series: negative lag");

  // Center both functions first; the transfer operator preserves the mean, so
  // each lag is a small-term sum rather than a difference of large ones.
  std::vector<double> terms(n), vc(n), wc(n);
  for (int i = 0; i < n; ++i) terms[i] = measure.masses[i] * v[i];
  const double mv = pairwise_sum(terms);
  for (int i = 0; i < n; ++i) terms[i] = measure.masses[i] * w[i];
  const double mw = pairwise_sum(terms);
  for (int i = 0; i < n; ++i) {
    vc[i] = v[i] - mv;
    wc[i] = w[i] - mw;
  }

  CovarianceSeries series;
  series.method = CovarianceSeries::Method::ulam;
  series.values.resize(lag_max + 1);
  std::vector<double> cur = wc, next(n);
  for (int lag = 0; lag <= lag_max; ++lag) {
    for (int i = 0; i < n; ++i) terms[i] = measure.masses[i] * vc[i] * cur[i];
    series.values[lag] = pairwise_sum(terms);
    if (lag < lag_max) {
      op.transfer.multiply(cur, next);
      cur.swap(next);
    }
  }
  return series;
}

CovarianceSeries covariance_series_mc(const MapModel& model, const UlamMeasure& measure,
                                      const std::function<double(double)>& v,
                                      const std::function<double(double)>& w,
                                      int lag_max, std::size_t samples,
                                      std::uint64_t seed) {
  CovarianceSeries series;
  series.method = CovarianceSeries::Method::monte_carlo;
  series.values.assign(lag_max + 1, 0.0);
  std::vector<double> orbit(lag_max + 1);
  std::vector<double> sum_vw(lag_max + 1, 0.0);
  double sum_w = 0.0, sum_v = 0.0;
  RngStream rng = derive_stream(seed, "cov-mc");
  for (std::size_t s = 0; s < samples; ++s) {
    const double x0 = sample_mu_point(measure, rng);
    iterate_orbit_into(model, x0, orbit);
    const double w0 = w(orbit[0]);
    sum_w += w0;
    sum_v += v(orbit[0]);
    for (int lag = 0; lag <= lag_max; ++lag) sum_vw[lag] += v(orbit[lag]) * w0;
  }
  const double inv = 1.0 / static_cast<double>(samples);
  for (int lag = 0; lag <= lag_max; ++lag)
    series.values[lag] = sum_vw[lag] * inv - (sum_v * inv) * (sum_w * inv);
  return series;
}

DecayProbe operator_l1_decay_probe(const UlamOperator& op, const UlamMeasure& measure,
                                   std::span<const double> f, int q_max) {
  const int n = measure.cells();
  if (static_cast<int>(f.size()) != n)
    throw std::invalid_argument("operator_l1_decay_probe: size mismatch");
  std::vector<double> terms(n);
  for (int i = 0; i < n; ++i) terms[i] = measure.masses[i] * f[i];
  const double mf = pairwise_sum(terms);

  DecayProbe probe;
  probe.values.resize(q_max + 1);
  std::vector<double> cur(n), next(n);
  for (int i = 0; i < n; ++i) cur[i] = f[i] - mf;
  for (int q = 0; q <= q_max; ++q) {
    for (int i = 0; i < n; ++i) terms[i] = measure.masses[i] * std::abs(cur[i]);
    probe.values[q] = pairwise_sum(terms);
    if (q < q_max) {
      op.transfer.multiply(cur, next);
      cur.swap(next);
    }
  }
  std::vector<double> qs, ds;
  for (int q = std::max(1, q_max / 20); q <= q_max; ++q) {
    qs.push_back(static_cast<double>(q));
    ds.push_back(probe.values[q]);
  }
  try {
    probe.fitted_exponent = power_law_fit(qs, ds).slope;
  } catch (const std::invalid_argument&) {
    probe.fitted_exponent = 0.0;  // everything zero (constant f)
  }
  return probe;
}

GreenKubo green_kubo_sigma2(const CovarianceSeries& series) {
  const int lag_max = series.lag_max();
  if (lag_max < 1) throw std::invalid_argument("green_kubo_sigma2: need lags");
  GreenKubo gk;
  std::vector<double> tail_terms(series.values.begin() + 1, series.values.end());
  gk.truncated = series.values[0] + 2.0 * pairwise_sum(tail_terms);

  std::vector<double> xs, ys;
  for (int l = std::max(2, lag_max / 10); l <= lag_max; ++l) {
    if (series.values[l] > 0.0) {
      xs.push_back(static_cast<double>(l));
      ys.push_back(series.values[l]);
    }
  }
  if (xs.size() >= 5) {
    const LinearFit fit = power_law_fit(xs, ys);
    gk.tail_fitted = true;
    gk.tail_exponent = -fit.slope;
    if (gk.tail_exponent <= 1.0) {
      gk.tail_summable = false;
      gk.tail_estimate = 0.0;
    } else {
      const double amp = std::exp(fit.intercept);
      gk.tail_estimate = 2.0 * amp *
                         std::pow(static_cast<double>(lag_max) + 0.5, 1.0 - gk.tail_exponent) /
                         (gk.tail_exponent - 1.0);
    }
  }
  gk.sigma2 = gk.truncated + gk.tail_estimate;
  return gk;
}

EmpiricalDistribution quantile_discretization(const UlamMeasure& measure, int count) {
  if (count < 1) throw std::invalid_argument("quantile_discretization: count >= 1");
  std::vector<double> locs(count);
  for (int k = 0; k < count; ++k)
    locs[k] = measure.quantile((static_cast<double>(k) + 0.5) / count);
  return EmpiricalDistribution::equal_weights(std::move(locs), SupportDomain::unit_interval);
}

// --- serialization ----------------------------------------------------------

namespace {

constexpr std::uint32_t kMagic = 0x4d414c55;  // "ULAM"
constexpr std::uint32_t kVersion = 1;

struct Hasher {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void update(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  }
};

template <typename T>
void write_pod(std::ostream& os, Hasher& hash, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
  hash.update(&value, sizeof(T));
}

template <typename T>
void write_vec(std::ostream& os, Hasher& hash, const std::vector<T>& v) {
  const std::uint64_t n = v.size();
  write_pod(os, hash, n);
  os.write(reinterpret_cast<const char*>(v.data()), n * sizeof(T));
  hash.update(v.data(), n * sizeof(T));
}

template <typename T>
bool read_pod(std::istream& is, Hasher& hash, T& value) {
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) return false;
  hash.update(&value, sizeof(T));
  return true;
}

template <typename T>
bool read_vec(std::istream& is, Hasher& hash, std::vector<T>& v, std::uint64_t cap) {
  std::uint64_t n = 0;
  if (!read_pod(is, hash, n)) return false;
  if (n > cap) return false;
  v.resize(n);
  is.read(reinterpret_cast<char*>(v.data()), n * sizeof(T));
  if (!is) return false;
  hash.update(v.data(), n * sizeof(T));
  return true;
}

}  // namespace

std::filesystem::path ulam_cache_path(const std::filesystem::path& dir, double alpha,
                                      int cells, GridScheme scheme) {
  std::uint64_t bits;
  std::memcpy(&bits, &alpha, sizeof(bits));
  char name[96];
  std::snprintf(name, sizeof(name), "ulam_a%016llx_N%d_%s.bin",
                static_cast<unsigned long long>(bits), cells, grid_scheme_name(scheme));
  return dir / name;
}

void save_ulam(const UlamSystem& system, const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_ulam: cannot open " + path.string());
  Hasher hash;
  write_pod(os, hash, kMagic);
  write_pod(os, hash, kVersion);
  write_pod(os, hash, system.measure.alpha);
  write_pod(os, hash, static_cast<std::int32_t>(system.measure.cells()));
  write_pod(os, hash, static_cast<std::int32_t>(system.measure.scheme));
  write_pod(os, hash, system.stationary_residual);
  write_pod(os, hash, static_cast<std::int32_t>(system.power_iterations));
  write_vec(os, hash, system.measure.boundaries);
  write_vec(os, hash, system.measure.masses);
  write_vec(os, hash, system.measure.markov_points);
  write_vec(os, hash, system.op.ulam.row_ptr);
  write_vec(os, hash, system.op.ulam.col_idx);
  write_vec(os, hash, system.op.ulam.vals);
  os.write(reinterpret_cast<const char*>(&hash.h), sizeof(hash.h));
  if (!os) throw std::runtime_error("save_ulam: write failed for " + path.string());
}

std::optional<UlamSystem> load_ulam(const std::filesystem::path& path, double alpha,
                                    int cells, GridScheme scheme) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  Hasher hash;
  std::uint32_t magic = 0, version = 0;
  double file_alpha = 0.0, residual = 0.0;
  std::int32_t file_cells = 0, file_scheme = 0, iterations = 0;
  if (!read_pod(is, hash, magic) || magic != kMagic) return std::nullopt;
  if (!read_pod(is, hash, version) || version != kVersion) return std::nullopt;
  if (!read_pod(is, hash, file_alpha)) return std::nullopt;
  if (!read_pod(is, hash, file_cells)) return std::nullopt;
  if (!read_pod(is, hash, file_scheme)) return std::nullopt;
  if (!read_pod(is, hash, residual)) return std::nullopt;
  if (!read_pod(is, hash, iterations)) return std::nullopt;
  if (file_alpha != alpha || file_cells != cells ||
      file_scheme != static_cast<std::int32_t>(scheme))
    return std::nullopt;

  constexpr std::uint64_t cap = 1ULL << 28;
  UlamSystem sys;
  UlamMeasure& m = sys.measure;
  if (!read_vec(is, hash, m.boundaries, cap)) return std::nullopt;
  if (!read_vec(is, hash, m.masses, cap)) return std::nullopt;
  if (!read_vec(is, hash, m.markov_points, cap)) return std::nullopt;
  if (!read_vec(is, hash, sys.op.ulam.row_ptr, cap)) return std::nullopt;
  if (!read_vec(is, hash, sys.op.ulam.col_idx, cap)) return std::nullopt;
  if (!read_vec(is, hash, sys.op.ulam.vals, cap)) return std::nullopt;
  std::uint64_t stored = 0;
  is.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  if (!is || stored != hash.h) return std::nullopt;
  if (m.boundaries.size() != m.masses.size() + 1 ||
      static_cast<int>(m.masses.size()) != cells)
    return std::nullopt;

  m.alpha = alpha;
  m.scheme = scheme;
  sys.stationary_residual = residual;
  sys.power_iterations = iterations;
  sys.op.ulam.rows = sys.op.ulam.cols = cells;
  sys.op.transfer = build_transfer(sys.op.ulam, m.masses);
  m.density.resize(m.masses.size());
  m.cdf.resize(m.masses.size());
  double acc = 0.0;
  for (int i = 0; i < m.cells(); ++i) {
    const double w = m.width(i);
    m.density[i] = w > 0.0 ? m.masses[i] / w : 0.0;
    acc += m.masses[i];
    m.cdf[i] = acc;
  }
  m.cdf.back() = 1.0;
  return sys;
}

UlamSystem build_or_load_ulam(const MapModel& model, int cells, GridScheme scheme,
                              const std::filesystem::path& cache_dir) {
  const auto path = ulam_cache_path(cache_dir, model.alpha, cells, scheme);
  if (auto cached = load_ulam(path, model.alpha, cells, scheme)) return std::move(*cached);
  UlamSystem sys = build_ulam(model, cells, scheme);
  save_ulam(sys, path);
  return sys;
}

}  // namespace imlab
