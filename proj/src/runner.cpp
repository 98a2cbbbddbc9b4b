#include "imlab/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "imlab/applications.hpp"
#include "imlab/concentration.hpp"
#include "imlab/parallel.hpp"

namespace imlab {

using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("file_checksum: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    const std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!is) break;
  }
  return h;
}

namespace {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : path_(path) {
    os_.open(path, std::ios::trunc);
    if (!os_) throw std::runtime_error("cannot open output file " + path.string());
    os_ << header << "\n";
  }
  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((os_ << (first ? "" : ","), first = false, write_field(fields)), ...);
    os_ << "\n";
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  void write_field(double v) { os_ << format_double(v); }
  void write_field(const std::string& s) { os_ << s; }
  void write_field(const char* s) { os_ << s; }
  void write_field(std::size_t v) { os_ << v; }
  void write_field(int v) { os_ << v; }
  void write_field(bool v) { os_ << (v ? 1 : 0); }

  std::filesystem::path path_;
  std::ofstream os_;
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

json battery_summary(const BatteryResult& battery) {
  json reports = json::array();
  for (std::size_t i = 0; i < battery.reports.size(); ++i) {
    const auto& r = battery.reports[i];
    reports.push_back({{"observable", r.observable},
                       {"n", r.n},
                       {"variance", r.variance.variance},
                       {"variance_ci", {r.variance.ci_lo, r.variance.ci_hi}},
                       {"lip_sq_sum", r.lip_sq_sum},
                       {"ratio", r.ratio},
                       {"within_bound", static_cast<bool>(battery.within_bound[i])}});
  }
  return {{"d_hat", battery.d_hat},
          {"exploratory", battery.exploratory},
          {"all_within_bound", battery.all_within},
          {"birkhoff_ratio_spread", battery.birkhoff_ratio_spread},
          {"birkhoff_ratio_stable", battery.birkhoff_ratio_stable},
          {"chebyshev_tails_ok", battery.tails_ok},
          {"certification_failures", battery.certification_failures},
          {"reports", reports}};
}

}  // namespace

RunOutcome run_experiments(const RunConfig& config, const RunOptions& options) {
  RunOutcome outcome;

  RunConfig cfg = config;
  if (options.seed_override) {
    cfg.seed = *options.seed_override;
    cfg.has_seed = true;
  }
  if (options.output_dir_override) cfg.output_dir = *options.output_dir_override;

  outcome.errors = validate_config(cfg);
  std::vector<std::string> selection = options.experiment_filter;
  if (selection.empty()) selection = cfg.configured_experiments();
  for (const auto& name : selection)
    if (!cfg.has_experiment(name))
      outcome.errors.push_back("experiments: '" + name + "' requested but not configured");
  if (!outcome.errors.empty()) {
    outcome.status = 1;
    return outcome;
  }

  const unsigned threads =
      options.threads == 0 ? default_thread_count() : options.threads;
  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);
  outcome.output_dir = out_dir;

  std::filesystem::path cache_dir;
  if (options.cache_dir_override)
    cache_dir = *options.cache_dir_override;
  else if (!cfg.cache.dir.empty())
    cache_dir = cfg.cache.dir;
  else if (const char* env = std::getenv("IMLAB_CACHE_DIR"); env && *env)
    cache_dir = env;
  else
    cache_dir = out_dir / "cache";

  json summary;
  summary["alpha"] = cfg.alpha;
  summary["seed"] = cfg.seed;
  summary["ulam"] = {{"cells", cfg.ulam_cells},
                     {"grid_scheme", grid_scheme_name(cfg.grid_scheme)}};
  json timings;

  const MapModel model(cfg.alpha);
  Timer measure_timer;
  UlamSystem system = [&]() {
    switch (cfg.cache.policy) {
      case CacheConfig::Policy::off:
        return build_ulam(model, cfg.ulam_cells, cfg.grid_scheme);
      case CacheConfig::Policy::rebuild: {
        UlamSystem s = build_ulam(model, cfg.ulam_cells, cfg.grid_scheme);
        save_ulam(s, ulam_cache_path(cache_dir, cfg.alpha, cfg.ulam_cells, cfg.grid_scheme));
        return s;
      }
      case CacheConfig::Policy::use:
      default:
        return build_or_load_ulam(model, cfg.ulam_cells, cfg.grid_scheme, cache_dir);
    }
  }();
  timings["measure"] = measure_timer.seconds();
  summary["measure"] = {{"stationary_residual", system.stationary_residual},
                        {"power_iterations", system.power_iterations}};

  const auto selected = [&](const char* name) {
    return std::find(selection.begin(), selection.end(), name) != selection.end();
  };
  const double mean_x = system.measure.integrate([](double x) { return x; });
  const auto v_centered = [mean_x](double x) { return x - mean_x; };

  if (selected("concentration")) {
    Timer timer;
    const BatteryResult battery = run_concentration_battery(
        model, system.measure, system.op, *cfg.concentration, cfg.seed, threads);
    CsvWriter csv(out_dir / "concentration.csv",
                  "observable,alpha,n,trials,variance,var_ci_lo,var_ci_hi,lip_sq_sum,"
                  "ratio,exploratory");
    for (const auto& r : battery.reports)
      csv.row(r.observable, r.alpha, r.n, r.trials, r.variance.variance, r.variance.ci_lo,
              r.variance.ci_hi, r.lip_sq_sum, r.ratio, r.exploratory);
    outcome.files_written.push_back(csv.path());
    CsvWriter tails(out_dir / "chebyshev.csv",
                    "observable,alpha,n,t,empirical_tail,bound,vacuous");
    for (const auto& r : battery.reports)
      for (const auto& row : r.tails)
        tails.row(r.observable, r.alpha, r.n, row.t, row.empirical, row.bound, row.vacuous);
    outcome.files_written.push_back(tails.path());
    summary["concentration"] = battery_summary(battery);
    timings["concentration"] = timer.seconds();
  }

  if (selected("asclt")) {
    Timer timer;
    const AscltResult r =
        run_asclt(model, system.measure, system.op, v_centered, *cfg.asclt, cfg.seed, threads);
    CsvWriter csv(out_dir / "asclt.csv", "alpha,orbit,n,kappa");
    for (std::size_t t = 0; t < r.kappa.size(); ++t)
      for (std::size_t c = 0; c < r.checkpoints.size(); ++c)
        csv.row(cfg.alpha, t, r.checkpoints[c], r.kappa[t][c]);
    outcome.files_written.push_back(csv.path());
    summary["asclt"] = {{"sigma2", r.green_kubo.sigma2},
                        {"sigma2_truncated", r.green_kubo.truncated},
                        {"tail_exponent", r.green_kubo.tail_exponent},
                        {"checkpoints", r.checkpoints},
                        {"median_kappa", r.medians},
                        {"trials", cfg.asclt->trials},
                        {"small_sample", cfg.asclt->trials < 100}};
    timings["asclt"] = timer.seconds();
  }

  if (selected("kde")) {
    Timer timer;
    const KdeResult r = run_kde(model, system.measure, *cfg.kde, cfg.seed, threads);
    CsvWriter csv(out_dir / "kde.csv", "alpha,n,bandwidth,trial,tv");
    for (std::size_t i = 0; i < r.n_grid.size(); ++i)
      for (std::size_t t = 0; t < r.tv[i].size(); ++t)
        csv.row(cfg.alpha, r.n_grid[i], r.bandwidths[i], t, r.tv[i][t]);
    outcome.files_written.push_back(csv.path());
    summary["kde"] = {{"n_grid", r.n_grid},
                      {"bandwidths", r.bandwidths},
                      {"trials", cfg.kde->trials},
                      {"small_sample", cfg.kde->trials < 100},
                      {"median_tv", r.medians},
                      {"medians_decreasing", r.medians_decreasing},
                      {"max_integral_error", r.max_integral_error},
                      {"tail_constant", r.tail_constant},
                      {"tail_empirical", r.tail_empirical},
                      {"tail_bounds", r.tail_bounds},
                      {"tail_consistent", r.tail_consistent}};
    timings["kde"] = timer.seconds();
  }

  if (selected("empirical_measure")) {
    Timer timer;
    const EmpiricalMeasureResult r =
        run_empirical_measure(model, system.measure, *cfg.empirical_measure, cfg.seed, threads);
    CsvWriter csv(out_dir / "empirical_measure.csv", "alpha,n,trial,kappa");
    for (std::size_t i = 0; i < r.n_grid.size(); ++i)
      for (std::size_t t = 0; t < r.kappa[i].size(); ++t)
        csv.row(cfg.alpha, r.n_grid[i], t, r.kappa[i][t]);
    outcome.files_written.push_back(csv.path());
    summary["empirical_measure"] = {{"n_grid", r.n_grid},
                                    {"trials", cfg.empirical_measure->trials},
                                    {"small_sample", cfg.empirical_measure->trials < 100},
                                    {"median_kappa", r.medians},
                                    {"medians_monotone", r.medians_monotone},
                                    {"c_hat", r.c_hat},
                                    {"bound_ok", r.bound_ok},
                                    {"fitted_beta", r.fitted_beta}};
    timings["empirical_measure"] = timer.seconds();
  }

  if (selected("periodogram")) {
    Timer timer;
    const PeriodogramResult r = run_periodogram(model, system.measure, system.op, v_centered,
                                                *cfg.periodogram, cfg.seed, threads);
    CsvWriter csv(out_dir / "periodogram.csv", "alpha,n,trial,sup_dev");
    for (std::size_t i = 0; i < r.n_grid.size(); ++i)
      for (std::size_t t = 0; t < r.sup_dev[i].size(); ++t)
        csv.row(cfg.alpha, r.n_grid[i], t, r.sup_dev[i][t]);
    outcome.files_written.push_back(csv.path());
    summary["periodogram"] = {{"n_grid", r.n_grid},
                              {"trials", cfg.periodogram->trials},
                              {"small_sample", cfg.periodogram->trials < 100},
                              {"mean_sup_sq", r.mean_sq},
                              {"decreasing", r.decreasing},
                              {"c_hat", r.c_hat},
                              {"bound_ok", r.bound_ok},
                              {"parseval_error", r.parseval_error}};
    timings["periodogram"] = timer.seconds();
  }

  if (selected("shadowing")) {
    Timer timer;
    const ShadowingResult r =
        run_shadowing(model, system.measure, *cfg.shadowing, cfg.seed, threads);
    CsvWriter csv(out_dir / "shadowing_distance.csv", "alpha,n,trial,z_a");
    for (std::size_t i = 0; i < r.n_grid.size(); ++i)
      for (std::size_t t = 0; t < r.z_a[i].size(); ++t)
        csv.row(cfg.alpha, r.n_grid[i], t, r.z_a[i][t]);
    outcome.files_written.push_back(csv.path());
    CsvWriter mismatch(out_dir / "shadowing_mismatch.csv",
                       "alpha,n,epsilon,trial,zp_mollified,zp_raw");
    for (std::size_t i = 0; i < r.n_grid.size(); ++i)
      for (std::size_t e = 0; e < r.eps_grid.size(); ++e)
        for (std::size_t t = 0; t < r.zp_moll[i][e].size(); ++t)
          mismatch.row(cfg.alpha, r.n_grid[i], r.eps_grid[e], t, r.zp_moll[i][e][t],
                       r.zp_raw[i][e][t]);
    outcome.files_written.push_back(mismatch.path());
    summary["shadowing"] = {{"n_grid", r.n_grid},
                            {"eps_grid", r.eps_grid},
                            {"trials", cfg.shadowing->trials},
                            {"small_sample", cfg.shadowing->trials < 100},
                            {"q75_scaled", r.q75_scaled},
                            {"q75_spread", r.q75_spread},
                            {"q75_stable", r.q75_stable},
                            {"z_scale_bounded", r.z_scale_bounded},
                            {"zp_calibrated", r.zp_calibrated},
                            {"zp_scale_bounded", r.zp_scale_bounded},
                            {"pointwise_ok", r.pointwise_ok}};
    timings["shadowing"] = timer.seconds();
  }

  {
    std::ofstream os(out_dir / "summary.json", std::ios::trunc);
    os << summary.dump(2) << "\n";
    if (!os) throw std::runtime_error("cannot write summary.json");
    outcome.files_written.push_back(out_dir / "summary.json");
  }

  json manifest;
  manifest["config_hash"] = cfg.config_hash;
  manifest["seed"] = cfg.seed;
  manifest["version"] = "1.0.0";
  manifest["threads"] = threads;
  manifest["timings_seconds"] = timings;
  json files = json::array();
  for (const auto& path : outcome.files_written) {
    files.push_back({{"name", path.filename().string()},
                     {"bytes", std::filesystem::file_size(path)},
                     {"fnv64", file_checksum(path)}});
  }
  manifest["files"] = files;
  {
    std::ofstream os(out_dir / "manifest.json", std::ios::trunc);
    os << manifest.dump(2) << "\n";
    if (!os) throw std::runtime_error("cannot write manifest.json");
  }
  return outcome;
}

}  // namespace imlab
