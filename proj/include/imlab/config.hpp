#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "imlab/applications.hpp"
#include "imlab/concentration.hpp"
#include "imlab/invariant_measure.hpp"

namespace imlab {

struct CacheConfig {
  enum class Policy { use, rebuild, off };
  Policy policy = Policy::use;
  std::string dir;  // empty: env IMLAB_CACHE_DIR, else <output_dir>/cache
};

/// Parsed experiment-run configuration (JSON file, documented in
/// docs/FORMATS.md). An experiment runs iff its block is present.
struct RunConfig {
  double alpha = 0.0;
  bool has_alpha = false;
  std::uint64_t seed = 0;
  bool has_seed = false;  // no wall-clock default: the seed must be explicit
  std::string output_dir = "out";
  int ulam_cells = 4096;
  GridScheme grid_scheme = GridScheme::markov_refined;
  CacheConfig cache;

  std::optional<BatteryConfig> concentration;
  std::optional<AscltConfig> asclt;
  std::optional<KdeConfig> kde;
  std::optional<EmpiricalMeasureConfig> empirical_measure;
  std::optional<PeriodogramConfig> periodogram;
  std::optional<ShadowingConfig> shadowing;

  std::uint64_t config_hash = 0;  // FNV-1a of the canonical JSON dump

  bool has_experiment(const std::string& name) const;
  std::vector<std::string> configured_experiments() const;
};

/// Parses a config file; throws std::runtime_error with a field-level message
/// on malformed JSON or wrong types.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);

/// Range and consistency checks only (no computation). Returns one message
/// per violated constraint; empty means valid.
std::vector<std::string> validate_config(const RunConfig& config);

}  // namespace imlab
