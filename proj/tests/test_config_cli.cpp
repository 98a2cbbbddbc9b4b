#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "imlab/config.hpp"
#include "imlab/runner.hpp"

using namespace imlab;

namespace {

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

std::string tiny_config(const std::string& out_dir) {
  return std::string(R"({
    "alpha": 0.3,
    "seed": 424242,
    "output_dir": ")") +
         out_dir + R"(",
    "ulam": { "cells": 128, "grid_scheme": "markov_refined" },
    "cache": { "policy": "off" },
    "experiments": {
      "empirical_measure": { "n_grid": [50, 200], "trials": 40, "quantile_atoms": 500 },
      "shadowing": { "a_set": [[0.4, 0.6]], "n_grid": [50], "eps_grid": [0.1],
                     "trials": 30, "y_candidates": 8 }
    }
  })";
}

}  // namespace

TEST_CASE("sample configs in the repo validate") {
  for (const char* name : {"configs/default.json", "configs/concentration_alpha01.json"}) {
    const auto path = std::filesystem::path(IMLAB_SOURCE_DIR) / name;
    const RunConfig config = load_config(path);
    const auto errors = validate_config(config);
    for (const auto& e : errors) MESSAGE(e);
    CHECK(errors.empty());
    CHECK(config.has_seed);
    CHECK(!config.configured_experiments().empty());
  }
}

TEST_CASE("validation catches the documented misconfigurations") {
  // Missing seed.
  RunConfig no_seed = parse_config_text(R"({
    "alpha": 0.3,
    "experiments": { "empirical_measure": {} }
  })");
  CHECK(mentions(validate_config(no_seed), "seed"));

  // Empty experiment selection.
  RunConfig no_experiments = parse_config_text(R"({ "alpha": 0.3, "seed": 1 })");
  CHECK(mentions(validate_config(no_experiments), "experiments"));

  // Alpha out of range.
  RunConfig bad_alpha = parse_config_text(R"({
    "alpha": 1.3, "seed": 1,
    "experiments": { "empirical_measure": {} }
  })");
  CHECK(mentions(validate_config(bad_alpha), "alpha"));

  // KDE schedule with n * a_n decreasing.
  RunConfig bad_kde = parse_config_text(R"({
    "alpha": 0.3, "seed": 1,
    "experiments": { "kde": { "n_grid": [1000, 4000], "bandwidths": [0.5, 0.05] } }
  })");
  CHECK(mentions(validate_config(bad_kde), "n * a_n"));

  // Exploratory alpha is allowed (only labeled downstream).
  RunConfig exploratory = parse_config_text(R"({
    "alpha": 0.2, "seed": 1,
    "experiments": { "concentration": { "n_grid": [100], "trials": 150 } }
  })");
  CHECK(validate_config(exploratory).empty());

  // Unknown experiment names are parse errors.
  CHECK_THROWS(parse_config_text(R"({
    "alpha": 0.3, "seed": 1,
    "experiments": { "mystery": {} }
  })"));
}

TEST_CASE("runner: determinism across repeats and worker counts") {
  const auto base = std::filesystem::temp_directory_path() / "imlab_runner_test";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);

  const RunConfig config = parse_config_text(tiny_config((base / "run").string()));
  REQUIRE(validate_config(config).empty());

  RunOptions opts1;
  opts1.threads = 1;
  opts1.output_dir_override = (base / "run1").string();
  RunOptions opts8 = opts1;
  opts8.threads = 8;
  opts8.output_dir_override = (base / "run8").string();

  const RunOutcome r1 = run_experiments(config, opts1);
  const RunOutcome r8 = run_experiments(config, opts8);
  REQUIRE(r1.status == 0);
  REQUIRE(r8.status == 0);

  for (const char* file : {"empirical_measure.csv", "shadowing_distance.csv",
                           "shadowing_mismatch.csv", "summary.json"}) {
    const auto a = file_checksum(base / "run1" / file);
    const auto b = file_checksum(base / "run8" / file);
    CHECK(a == b);
  }

  // A different seed changes the data.
  RunOptions opts_seed = opts1;
  opts_seed.output_dir_override = (base / "run_seed").string();
  opts_seed.seed_override = 777;
  const RunOutcome rs = run_experiments(config, opts_seed);
  REQUIRE(rs.status == 0);
  CHECK(file_checksum(base / "run1" / "empirical_measure.csv") !=
        file_checksum(base / "run_seed" / "empirical_measure.csv"));

  // Manifest lists every written file with its checksum.
  {
    std::ifstream is(base / "run1" / "manifest.json");
    REQUIRE(is.good());
    std::string manifest((std::istreambuf_iterator<char>(is)),
                         std::istreambuf_iterator<char>());
    for (const char* file : {"empirical_measure.csv", "shadowing_distance.csv",
                             "shadowing_mismatch.csv", "summary.json"})
      CHECK(manifest.find(file) != std::string::npos);
  }
  std::filesystem::remove_all(base);
}

TEST_CASE("runner: experiment filter and validation failures") {
  const auto base = std::filesystem::temp_directory_path() / "imlab_runner_filter";
  std::filesystem::remove_all(base);
  const RunConfig config = parse_config_text(tiny_config((base / "run").string()));

  RunOptions opts;
  opts.threads = 2;
  opts.output_dir_override = (base / "only_em").string();
  opts.experiment_filter = {"empirical_measure"};
  const RunOutcome r = run_experiments(config, opts);
  REQUIRE(r.status == 0);
  CHECK(std::filesystem::exists(base / "only_em" / "empirical_measure.csv"));
  CHECK(!std::filesystem::exists(base / "only_em" / "shadowing_distance.csv"));

  RunOptions bad;
  bad.experiment_filter = {"kde"};  // not configured in the tiny config
  const RunOutcome rb = run_experiments(config, bad);
  CHECK(rb.status == 1);
  CHECK(mentions(rb.errors, "kde"));

  RunConfig invalid = config;
  invalid.has_seed = false;
  const RunOutcome ri = run_experiments(invalid, RunOptions{});
  CHECK(ri.status == 1);
  CHECK(mentions(ri.errors, "seed"));
  std::filesystem::remove_all(base);
}

TEST_CASE("runner: exploratory alpha battery run carries the flag") {
  const auto base = std::filesystem::temp_directory_path() / "imlab_runner_exploratory";
  std::filesystem::remove_all(base);
  const RunConfig config = parse_config_text(std::string(R"({
    "alpha": 0.2,
    "seed": 31337,
    "output_dir": ")") + (base / "out").string() + R"(",
    "ulam": { "cells": 128, "grid_scheme": "markov_refined" },
    "cache": { "policy": "off" },
    "experiments": {
      "concentration": { "n_grid": [50], "trials": 120, "certify_samples": 8,
                         "shadowing_candidates": 8, "quantile_atoms": 400,
                         "omega_count": 128, "covariance_lags": 50 }
    }
  })");
  REQUIRE(validate_config(config).empty());
  RunOptions opts;
  opts.threads = 2;
  const RunOutcome r = run_experiments(config, opts);
  REQUIRE(r.status == 0);
  std::ifstream is(base / "out" / "summary.json");
  REQUIRE(is.good());
  const std::string summary((std::istreambuf_iterator<char>(is)),
                            std::istreambuf_iterator<char>());
  CHECK(summary.find("\"exploratory\": true") != std::string::npos);
  CHECK(std::filesystem::exists(base / "out" / "concentration.csv"));
  CHECK(std::filesystem::exists(base / "out" / "chebyshev.csv"));
  std::filesystem::remove_all(base);
}

TEST_CASE("runner: cache round trip across runs") {
  const auto base = std::filesystem::temp_directory_path() / "imlab_runner_cache";
  std::filesystem::remove_all(base);
  std::string text = tiny_config((base / "out").string());
  text.replace(text.find("\"off\""), 5, "\"use\"");
  const RunConfig config = parse_config_text(text);

  RunOptions opts;
  opts.threads = 2;
  opts.cache_dir_override = (base / "cache").string();
  opts.output_dir_override = (base / "out_a").string();
  const RunOutcome ra = run_experiments(config, opts);
  REQUIRE(ra.status == 0);
  CHECK(std::filesystem::exists(
      ulam_cache_path(base / "cache", 0.3, 128, GridScheme::markov_refined)));

  opts.output_dir_override = (base / "out_b").string();
  const RunOutcome rb = run_experiments(config, opts);  // loads the cache
  REQUIRE(rb.status == 0);
  CHECK(file_checksum(base / "out_a" / "empirical_measure.csv") ==
        file_checksum(base / "out_b" / "empirical_measure.csv"));
  std::filesystem::remove_all(base);
}
