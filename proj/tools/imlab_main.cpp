#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imlab/config.hpp"
#include "imlab/runner.hpp"

namespace {

std::vector<std::string> split_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_validate(const std::string& config_path) {
  try {
    const imlab::RunConfig config = imlab::load_config(config_path);
    const auto errors = imlab::validate_config(config);
    if (errors.empty()) {
      std::cout << "config ok: " << config_path << "\n";
      for (const auto& name : config.configured_experiments())
        std::cout << "  experiment: " << name << "\n";
      return 0;
    }
    for (const auto& e : errors) std::cerr << "error: " << e << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_build_measure(const std::string& config_path, const std::string& cache_dir) {
  try {
    const imlab::RunConfig config = imlab::load_config(config_path);
    const auto errors = imlab::validate_config(config);
    for (const auto& e : errors) std::cerr << "error: " << e << "\n";
    if (!errors.empty()) return 1;
    std::filesystem::path cache =
        !cache_dir.empty()
            ? std::filesystem::path(cache_dir)
            : (!config.cache.dir.empty()
                   ? std::filesystem::path(config.cache.dir)
                   : std::filesystem::path(config.output_dir) / "cache");
    const imlab::MapModel model(config.alpha);
    const imlab::UlamSystem system =
        imlab::build_or_load_ulam(model, config.ulam_cells, config.grid_scheme, cache);
    std::cout << "measure ready: alpha=" << config.alpha << " cells=" << config.ulam_cells
              << " scheme=" << imlab::grid_scheme_name(config.grid_scheme) << "\n"
              << "  stationary residual: " << system.stationary_residual << "\n"
              << "  power iterations:    " << system.power_iterations << "\n"
              << "  cache file: "
              << imlab::ulam_cache_path(cache, config.alpha, config.ulam_cells,
                                        config.grid_scheme)
                     .string()
              << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_run(const std::string& config_path, const imlab::RunOptions& options) {
  try {
    const imlab::RunConfig config = imlab::load_config(config_path);
    const imlab::RunOutcome outcome = imlab::run_experiments(config, options);
    for (const auto& e : outcome.errors) std::cerr << "error: " << e << "\n";
    if (outcome.status == 0) {
      std::cout << "run complete: " << outcome.output_dir.string() << "\n";
      for (const auto& f : outcome.files_written)
        std::cout << "  wrote " << f.filename().string() << "\n";
    }
    return outcome.status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

void print_flag(const nlohmann::json& j, const std::string& key, const std::string& label) {
  if (j.contains(key))
    std::cout << "    " << label << ": " << (j.at(key).get<bool>() ? "yes" : "NO") << "\n";
}

int cmd_report(const std::string& out_dir) {
  try {
    const auto path = std::filesystem::path(out_dir) / "summary.json";
    std::ifstream is(path);
    if (!is) {
      std::cerr << "error: cannot open " << path.string() << "\n";
      return 1;
    }
    nlohmann::json summary;
    is >> summary;
    std::cout << "run summary (" << path.string() << ")\n";
    std::cout << "  alpha = " << summary.at("alpha").get<double>()
              << ", seed = " << summary.at("seed").get<std::uint64_t>() << "\n";
    if (summary.contains("concentration")) {
      const auto& c = summary.at("concentration");
      std::cout << "  concentration: D_hat = " << c.at("d_hat").get<double>() << "\n";
      print_flag(c, "all_within_bound", "variance within D_hat bound");
      print_flag(c, "birkhoff_ratio_stable", "sqrt-n Birkhoff ratio stable");
      print_flag(c, "chebyshev_tails_ok", "Chebyshev tails bounded");
      print_flag(c, "exploratory", "exploratory regime (alpha beyond 4-sqrt(15))");
    }
    if (summary.contains("asclt")) {
      const auto& a = summary.at("asclt");
      std::cout << "  asclt: sigma2 = " << a.at("sigma2").get<double>() << ", median kappa =";
      for (const auto& m : a.at("median_kappa")) std::cout << " " << m.get<double>();
      std::cout << "\n";
    }
    if (summary.contains("kde")) {
      const auto& k = summary.at("kde");
      std::cout << "  kde: median tv =";
      for (const auto& m : k.at("median_tv")) std::cout << " " << m.get<double>();
      std::cout << "\n";
      print_flag(k, "medians_decreasing", "medians decreasing");
      print_flag(k, "tail_consistent", "tail bound consistent");
    }
    if (summary.contains("empirical_measure")) {
      const auto& e = summary.at("empirical_measure");
      std::cout << "  empirical measure: fitted beta = " << e.at("fitted_beta").get<double>()
                << "\n";
      print_flag(e, "medians_monotone", "medians nonincreasing");
      print_flag(e, "bound_ok", "within calibrated n^{-1/4} bound");
    }
    if (summary.contains("periodogram")) {
      const auto& p = summary.at("periodogram");
      std::cout << "  periodogram: parseval error = "
                << p.at("parseval_error").get<double>() << "\n";
      print_flag(p, "decreasing", "mean sup^2 decreasing");
      print_flag(p, "bound_ok", "within calibrated envelope");
    }
    if (summary.contains("shadowing")) {
      const auto& s = summary.at("shadowing");
      std::cout << "  shadowing: q75 spread = " << s.at("q75_spread").get<double>() << "\n";
      print_flag(s, "q75_stable", "scaled upper quartile stable");
      print_flag(s, "pointwise_ok", "mismatch <= distance/eps pointwise");
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"imlab: intermittent interval map laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string cache_dir;
  std::string experiments;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  auto* validate = app.add_subcommand("validate", "schema and range checks only");
  validate->add_option("--config", config_path, "config file")->required();

  auto* build = app.add_subcommand("build-measure", "build or refresh the cached measure");
  build->add_option("--config", config_path, "config file")->required();
  build->add_option("--cache-dir", cache_dir, "cache directory override");

  auto* run = app.add_subcommand("run", "run the configured experiments");
  run->add_option("--config", config_path, "config file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "seed override");
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--threads", threads, "worker thread count (0 = hardware)");
  run->add_option("--experiments", experiments, "comma-separated subset to run");
  run->add_option("--cache-dir", cache_dir, "cache directory override");

  auto* report = app.add_subcommand("report", "summarize a finished run");
  report->add_option("--out", out_dir, "output directory of the run")->required();

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return cmd_validate(config_path);
  if (build->parsed()) return cmd_build_measure(config_path, cache_dir);
  if (run->parsed()) {
    imlab::RunOptions options;
    if (seed_opt->count() > 0) options.seed_override = seed;
    if (!out_dir.empty()) options.output_dir_override = out_dir;
    if (!cache_dir.empty()) options.cache_dir_override = cache_dir;
    options.experiment_filter = split_list(experiments);
    options.threads = threads;
    return cmd_run(config_path, options);
  }
  if (report->parsed()) return cmd_report(out_dir);
  return 1;
}
