// Acceptance suite: one numbered criterion per run (or all), each printing a
// single PASS/FAIL line with its measured runtime against the stated budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "imlab/applications.hpp"
#include "imlab/concentration.hpp"
#include "imlab/config.hpp"
#include "imlab/gaussian.hpp"
#include "imlab/parallel.hpp"
#include "imlab/rng.hpp"
#include "imlab/runner.hpp"
#include "imlab/stats.hpp"

using namespace imlab;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Env {
  std::filesystem::path cache_dir = "acceptance_cache";
  std::filesystem::path scratch_dir = "acceptance_scratch";
  unsigned threads = 0;

  unsigned worker_count() const {
    return threads == 0 ? std::min(default_thread_count(), 8u) : threads;
  }
  const UlamSystem& system(double alpha, int cells) const {
    static std::map<std::pair<double, int>, UlamSystem> store;
    auto it = store.find({alpha, cells});
    if (it == store.end())
      it = store
               .emplace(std::make_pair(alpha, cells),
                        build_or_load_ulam(MapModel(alpha), cells,
                                           GridScheme::markov_refined, cache_dir))
               .first;
    return it->second;
  }
};

struct Verdict {
  bool passed = false;
  std::string detail;
};

using Criterion = std::function<Verdict(const Env&)>;

// --- 1: transport oracle equivalence ---------------------------------------

Verdict criterion_transport_oracle(const Env&) {
  RngStream rng = derive_stream(kSeed, "acceptance-w1");
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto make = [&]() {
      const int n = 1 + static_cast<int>(rng.next_below(8));
      std::vector<double> locs(n), weights(n);
      for (int k = 0; k < n; ++k) {
        locs[k] = rng.next_double();
        weights[k] = 0.05 + rng.next_double();
      }
      return EmpiricalDistribution(std::move(locs), std::move(weights),
                                   SupportDomain::unit_interval);
    };
    const auto a = make();
    const auto b = make();
    worst = std::max(worst, std::abs(w1_distance(a, b) - w1_lp_oracle(a, b)));
  }
  Verdict v;
  v.passed = worst <= 1e-10;
  v.detail = "max |cdf - transport| = " + format_double(worst) + " over 1000 pairs";
  return v;
}

// --- 2: Markov partition asymptotics ----------------------------------------

Verdict criterion_partition_asymptotics(const Env&) {
  Verdict v;
  v.passed = true;
  std::ostringstream detail;
  for (double alpha : {0.1, 0.3}) {
    const MapModel model(alpha);
    const MarkovPartition p = build_partition(model, 10001);
    std::vector<double> ls, xs, ws;
    for (std::size_t l = 100; l <= 10000; ++l) {
      ls.push_back(static_cast<double>(l));
      xs.push_back(p.points[l]);
      ws.push_back(p.atom_width(l));
    }
    const double sx = power_law_fit(ls, xs).slope;
    const double sw = power_law_fit(ls, ws).slope;
    const double want_x = -1.0 / alpha;
    const double want_w = -1.0 / alpha - 1.0;
    const bool ok_x = std::abs(sx - want_x) <= 0.03 * std::abs(want_x);
    const bool ok_w = std::abs(sw - want_w) <= 0.05 * std::abs(want_w);
    v.passed = v.passed && ok_x && ok_w;
    detail << "alpha=" << alpha << ": x-slope " << format_double(sx) << " (want "
           << format_double(want_x) << "), width-slope " << format_double(sw) << " (want "
           << format_double(want_w) << "); ";
  }
  v.detail = detail.str();
  return v;
}

// --- 3: invariant measure ----------------------------------------------------

Verdict criterion_invariant_measure(const Env& env) {
  const auto& sys = env.system(0.3, 4096);
  const auto& m = sys.measure;
  Verdict v;

  const bool residual_ok = sys.stationary_residual <= 1e-10;

  const auto& mp = m.markov_points;
  std::vector<double> xs, hs;
  for (int i = 0; i < m.cells(); ++i) {
    const double mid = m.midpoint(i);
    if (mid > mp[200] && mid < mp[10]) {
      xs.push_back(mid);
      hs.push_back(m.density[i]);
    }
  }
  const double slope = power_law_fit(xs, hs).slope;
  const bool slope_ok = std::abs(slope - (-0.3)) <= 0.05;

  const MapModel model(0.3);
  RngStream rng = derive_stream(kSeed, "acceptance-invariance");
  const double tol = 2.0 / m.cells() + 1e-6;
  double worst = 0.0;
  int used = 0;
  while (used < 20) {
    double b1 = rng.next_double(), b2 = rng.next_double();
    if (b1 > b2) std::swap(b1, b2);
    if (b2 - b1 < 1e-3) continue;
    ++used;
    const double direct = m.interval_mass(b1, b2);
    const double pulled = m.interval_mass(inverse_branch(model, b1, Branch::left),
                                          inverse_branch(model, b2, Branch::left)) +
                          m.interval_mass(inverse_branch(model, b1, Branch::right),
                                          inverse_branch(model, b2, Branch::right));
    worst = std::max(worst, std::abs(direct - pulled));
  }
  const bool invariance_ok = worst <= tol;

  v.passed = residual_ok && slope_ok && invariance_ok;
  v.detail = "residual " + format_double(sys.stationary_residual) + ", density slope " +
             format_double(slope) + " (want -0.3 +- 0.05), worst invariance gap " +
             format_double(worst) + " (tol " + format_double(tol) + ")";
  return v;
}

// --- 4: correlation decay ----------------------------------------------------

Verdict criterion_correlation_decay(const Env& env) {
  const auto& sys = env.system(0.3, 4096);
  const std::vector<double> v_grid = sys.measure.grid_function([](double x) { return x; });
  const CovarianceSeries cov = covariance_series(sys.op, sys.measure, v_grid, v_grid, 200);
  std::vector<double> ls, cs;
  for (int l = 10; l <= 200; ++l) {
    ls.push_back(static_cast<double>(l));
    cs.push_back(cov.values[l]);
  }
  const double slope = power_law_fit(ls, cs).slope;
  const double want = -(1.0 / 0.3 - 1.0);
  Verdict v;
  v.passed = std::abs(slope - want) <= 0.25 * std::abs(want);
  v.detail = "decay exponent " + format_double(slope) + " (want " + format_double(want) +
             " +- 25%)";
  return v;
}

// --- 5: central limit theorem -------------------------------------------------

Verdict criterion_clt(const Env& env) {
  const auto& sys = env.system(0.3, 4096);
  const MapModel model(0.3);
  const double mean_x = sys.measure.integrate([](double x) { return x; });
  const auto v_grid = sys.measure.grid_function([mean_x](double x) { return x - mean_x; });

  const CovarianceSeries cov = covariance_series(sys.op, sys.measure, v_grid, v_grid, 400);
  const GreenKubo gk_full = green_kubo_sigma2(cov);
  CovarianceSeries half;
  half.values.assign(cov.values.begin(), cov.values.begin() + 201);
  const GreenKubo gk_half = green_kubo_sigma2(half);
  const double sigma_drift = std::abs(gk_full.sigma2 - gk_half.sigma2) / gk_full.sigma2;
  const bool sigma_ok = sigma_drift <= 0.05 && gk_full.sigma2 > 0.0;

  constexpr std::size_t n = 10000, trials = 2000;
  const double scale = std::sqrt(gk_full.sigma2 * static_cast<double>(n));
  std::vector<double> normalized(trials);
  parallel_for(trials, env.worker_count(), [&](std::size_t t) {
    RngStream rng = derive_stream(kSeed, "acceptance-clt", t);
    const double x0 = sample_mu_point(sys.measure, rng);
    std::vector<double> orbit(n);
    iterate_orbit_into(model, x0, orbit);
    double s = 0.0;
    for (double x : orbit) s += x - mean_x;
    normalized[t] = s / scale;
  });
  const double ks = ks_distance(normalized, [](double x) { return normal_cdf(x); });
  Verdict v;
  v.passed = ks <= 0.05 && sigma_ok;
  v.detail = "KS = " + format_double(ks) + " (tol 0.05), sigma2 = " +
             format_double(gk_full.sigma2) + ", truncation drift " +
             format_double(sigma_drift) + " (tol 0.05)";
  return v;
}

// --- 6/7: variance inequality battery and Chebyshev tails ---------------------

const BatteryResult& battery_result(const Env& env) {
  static bool ready = false;
  static BatteryResult result;
  if (!ready) {
    const auto& sys = env.system(0.1, 4096);
    BatteryConfig config;  // defaults match the acceptance protocol
    result = run_concentration_battery(MapModel(0.1), sys.measure, sys.op, config, kSeed,
                                       env.worker_count());
    ready = true;
  }
  return result;
}

Verdict criterion_variance_inequality(const Env& env) {
  const BatteryResult& battery = battery_result(env);
  Verdict v;
  v.passed = battery.all_within && battery.birkhoff_ratio_stable && !battery.exploratory;
  std::size_t within = 0;
  for (bool b : battery.within_bound) within += b ? 1 : 0;
  v.detail = "D_hat = " + format_double(battery.d_hat) + ", " + std::to_string(within) +
             "/" + std::to_string(battery.within_bound.size()) +
             " members within bound, birkhoff ratio spread " +
             format_double(battery.birkhoff_ratio_spread) + " (< 2)";
  if (!battery.certification_failures.empty())
    v.detail += ", certification failures: " +
                std::to_string(battery.certification_failures.size());
  return v;
}

Verdict criterion_chebyshev(const Env& env) {
  const BatteryResult& battery = battery_result(env);
  std::size_t rows = 0, violations = 0;
  for (const auto& report : battery.reports)
    for (const auto& row : report.tails) {
      if (row.vacuous) continue;
      ++rows;
      if (row.empirical > row.bound) ++violations;
    }
  Verdict v;
  v.passed = battery.tails_ok;
  v.detail = std::to_string(violations) + " violations over " + std::to_string(rows) +
             " non-vacuous tail rows";
  return v;
}

// --- 8: empirical measure ------------------------------------------------------

Verdict criterion_empirical_measure(const Env& env) {
  const auto& sys = env.system(0.3, 4096);
  EmpiricalMeasureConfig config;
  config.n_grid = {100, 1000, 10000, 100000};
  config.trials = 200;
  const EmpiricalMeasureResult r =
      run_empirical_measure(MapModel(0.3), sys.measure, config, kSeed, env.worker_count());
  Verdict v;
  v.passed = r.medians_monotone && r.bound_ok;
  std::ostringstream detail;
  detail << "medians";
  for (double m : r.medians) detail << " " << format_double(m);
  detail << ", C_hat = " << format_double(r.c_hat) << ", fitted rate "
         << format_double(r.fitted_beta);
  v.detail = detail.str();
  return v;
}

// --- 9: almost-sure CLT ----------------------------------------------------------

Verdict criterion_asclt(const Env& env) {
  const auto& sys = env.system(0.3, 4096);
  const double mean_x = sys.measure.integrate([](double x) { return x; });
  AscltConfig config;
  config.n_max = 100000;
  config.checkpoints = {1000, 10000, 100000};
  config.trials = 10;
  const AscltResult r =
      run_asclt(MapModel(0.3), sys.measure, sys.op,
                [mean_x](double x) { return x - mean_x; }, config, kSeed, env.worker_count());
  const double median_small = r.medians.front();
  const double median_large = r.medians.back();
  Verdict v;
  v.passed = median_large <= 0.1 && median_large <= 0.7 * median_small;
  v.detail = "median kappa: n=1e3 " + format_double(median_small) + ", n=1e5 " +
             format_double(median_large) + " (need <= 0.1 and >= 30% drop)";
  return v;
}

// --- 10: integrated periodogram ---------------------------------------------------

Verdict criterion_periodogram(const Env& env) {
  const auto& sys = env.system(0.1, 4096);
  const double mean_x = sys.measure.integrate([](double x) { return x; });
  PeriodogramConfig config;
  config.n_grid = {256, 1024, 4096};
  config.trials = 200;
  const PeriodogramResult r =
      run_periodogram(MapModel(0.1), sys.measure, sys.op,
                      [mean_x](double x) { return x - mean_x; }, config, kSeed,
                      env.worker_count());
  Verdict v;
  v.passed = r.decreasing && r.bound_ok && r.parseval_error <= 1e-8;
  std::ostringstream detail;
  detail << "mean sup^2";
  for (double m : r.mean_sq) detail << " " << format_double(m);
  detail << ", envelope C_hat " << format_double(r.c_hat) << ", parseval error "
         << format_double(r.parseval_error) << " (tol 1e-8)";
  v.detail = detail.str();
  return v;
}

// --- 11: kernel density estimation --------------------------------------------------

Verdict criterion_kde(const Env& env) {
  const auto& sys = env.system(0.3, 4096);
  KdeConfig config;
  config.n_grid = {1000, 10000, 100000};
  config.trials = 100;
  const KdeResult r = run_kde(MapModel(0.3), sys.measure, config, kSeed, env.worker_count());
  Verdict v;
  v.passed = r.medians_decreasing && r.max_integral_error <= 1e-8;
  std::ostringstream detail;
  detail << "median tv";
  for (double m : r.medians) detail << " " << format_double(m);
  detail << ", max |int h_n - 1| = " << format_double(r.max_integral_error) << " (tol 1e-8)";
  v.detail = detail.str();
  return v;
}

// --- 12: shadowing --------------------------------------------------------------------

Verdict criterion_shadowing(const Env& env) {
  const auto& sys = env.system(0.3, 4096);
  ShadowingConfig config;
  config.a_set = {{0.4, 0.6}};
  config.n_grid = {100, 1000, 10000};
  config.eps_grid = {0.05, 0.1, 0.2};
  config.trials = 200;
  config.y_candidates = 64;
  const ShadowingResult r =
      run_shadowing(MapModel(0.3), sys.measure, config, kSeed, env.worker_count());
  Verdict v;
  v.passed = r.q75_stable && r.pointwise_ok;
  std::ostringstream detail;
  detail << "q75(n^{1/3} Z_A)";
  for (double q : r.q75_scaled) detail << " " << format_double(q);
  detail << ", spread " << format_double(r.q75_spread) << " (need <= 2), pointwise Z' <= Z/eps "
         << (r.pointwise_ok ? "holds" : "VIOLATED");
  v.detail = detail.str();
  return v;
}

// --- 13: appendix distortion lemmas ------------------------------------------------------

Verdict criterion_distortion(const Env&) {
  const MapModel model(0.3);
  const MarkovPartition partition = build_partition(model, 150);
  const DistortionReport r = distortion_ratio_check(model, partition, 30, 10000, kSeed);
  const auto check_series = [](const std::vector<double>& c, double& spread) {
    for (double x : c)
      if (!(x > 0.0) || !std::isfinite(x)) return false;
    std::vector<double> sorted(c);
    std::sort(sorted.begin(), sorted.end());
    const double med = quantile_sorted(sorted, 0.5);
    spread = *std::max_element(c.begin(), c.end()) / med;
    return spread <= 2.0;
  };
  double spread1 = 0.0, spread2 = 0.0;
  const bool ok1 = check_series(r.c1, spread1);
  const bool ok2 = check_series(r.c2, spread2);
  Verdict v;
  v.passed = ok1 && ok2;
  v.detail = "C1 max/median " + format_double(spread1) + ", C2 max/median " +
             format_double(spread2) + " (need <= 2 over m <= 30)";
  return v;
}

// --- 14: determinism across worker counts --------------------------------------------------

Verdict criterion_determinism(const Env& env) {
  const std::filesystem::path base = env.scratch_dir / "determinism";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);

  // Criterion-6 run: the alpha = 0.1 battery.
  RunConfig battery_cfg;
  battery_cfg.alpha = 0.1;
  battery_cfg.has_alpha = true;
  battery_cfg.seed = kSeed;
  battery_cfg.has_seed = true;
  battery_cfg.ulam_cells = 4096;
  battery_cfg.grid_scheme = GridScheme::markov_refined;
  battery_cfg.cache.policy = CacheConfig::Policy::use;
  battery_cfg.concentration = BatteryConfig{};

  // Criterion-8 run: the alpha = 0.3 empirical-measure experiment.
  RunConfig empirical_cfg;
  empirical_cfg.alpha = 0.3;
  empirical_cfg.has_alpha = true;
  empirical_cfg.seed = kSeed;
  empirical_cfg.has_seed = true;
  empirical_cfg.ulam_cells = 4096;
  empirical_cfg.grid_scheme = GridScheme::markov_refined;
  empirical_cfg.cache.policy = CacheConfig::Policy::use;
  EmpiricalMeasureConfig em;
  em.n_grid = {100, 1000, 10000, 100000};
  em.trials = 200;
  empirical_cfg.empirical_measure = em;

  const auto run_with = [&](const RunConfig& cfg, unsigned threads,
                            const std::string& tag) {
    RunOptions options;
    options.threads = threads;
    options.output_dir_override = (base / tag).string();
    options.cache_dir_override = env.cache_dir.string();
    return run_experiments(cfg, options);
  };
  Verdict v;
  if (run_with(battery_cfg, 1, "battery1").status != 0 ||
      run_with(battery_cfg, 8, "battery8").status != 0 ||
      run_with(empirical_cfg, 1, "empirical1").status != 0 ||
      run_with(empirical_cfg, 8, "empirical8").status != 0) {
    v.detail = "runner failed";
    return v;
  }
  v.passed = true;
  std::ostringstream detail;
  const auto compare = [&](const std::string& dir1, const std::string& dir8,
                           const char* file) {
    const auto c1 = file_checksum(base / dir1 / file);
    const auto c8 = file_checksum(base / dir8 / file);
    if (c1 != c8) v.passed = false;
    detail << file << (c1 == c8 ? " identical; " : " DIFFERS; ");
  };
  compare("battery1", "battery8", "concentration.csv");
  compare("battery1", "battery8", "chebyshev.csv");
  compare("empirical1", "empirical8", "empirical_measure.csv");
  v.detail = detail.str();
  return v;
}

struct CriterionSpec {
  int id;
  const char* name;
  double budget_seconds;
  Criterion run;
};

const std::vector<CriterionSpec>& criteria() {
  static const std::vector<CriterionSpec> list = {
      {1, "transport oracle equivalence", 5.0, criterion_transport_oracle},
      {2, "Markov partition asymptotics", 30.0, criterion_partition_asymptotics},
      {3, "invariant measure", 120.0, criterion_invariant_measure},
      {4, "correlation decay", 120.0, criterion_correlation_decay},
      {5, "central limit theorem", 300.0, criterion_clt},
      {6, "variance inequality battery", 900.0, criterion_variance_inequality},
      {7, "Chebyshev tail corollary", 900.0, criterion_chebyshev},
      {8, "empirical measure convergence", 300.0, criterion_empirical_measure},
      {9, "almost-sure CLT", 300.0, criterion_asclt},
      {10, "integrated periodogram", 600.0, criterion_periodogram},
      {11, "kernel density estimation", 300.0, criterion_kde},
      {12, "shadowing scalings", 300.0, criterion_shadowing},
      {13, "distortion lemma constants", 120.0, criterion_distortion},
      {14, "determinism across workers", 7200.0, criterion_determinism},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  Env env;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const auto next = [&]() -> std::string {
      return i + 1 < argc ? argv[++i] : std::string();
    };
    if (arg == "--criterion")
      only = std::stoi(next());
    else if (arg == "--cache-dir")
      env.cache_dir = next();
    else if (arg == "--scratch-dir")
      env.scratch_dir = next();
    else if (arg == "--threads")
      env.threads = static_cast<unsigned>(std::stoul(next()));
    else {
      std::fprintf(stderr, "usage: %s [--criterion N] [--cache-dir D] [--scratch-dir D] [--threads N]\n",
                   argv[0]);
      return 2;
    }
  }
  std::filesystem::create_directories(env.cache_dir);
  std::filesystem::create_directories(env.scratch_dir);

  int failures = 0;
  for (const auto& spec : criteria()) {
    if (only != 0 && spec.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict verdict;
    try {
      verdict = spec.run(env);
    } catch (const std::exception& e) {
      verdict.passed = false;
      verdict.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = seconds < spec.budget_seconds;
    const bool ok = verdict.passed && in_budget;
    if (!ok) ++failures;
    std::printf("[%2d] %s %s: %s (%.1f s %s %.0f s)\n", spec.id, ok ? "PASS" : "FAIL",
                spec.name, verdict.detail.c_str(), seconds, in_budget ? "<" : ">=",
                spec.budget_seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
