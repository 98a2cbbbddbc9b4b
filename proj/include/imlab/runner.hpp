#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "imlab/config.hpp"

namespace imlab {

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> output_dir_override;
  std::optional<std::string> cache_dir_override;
  std::vector<std::string> experiment_filter;  // empty = all configured
  unsigned threads = 0;                        // 0 = hardware concurrency
};

struct RunOutcome {
  int status = 0;  // 0 on success
  std::filesystem::path output_dir;
  std::vector<std::string> errors;
  std::vector<std::filesystem::path> files_written;
};

/// Executes the configured experiments: builds or loads the cached Ulam
/// system, runs each selected experiment, writes the per-experiment CSV
/// files, summary.json and manifest.json (file list with checksums, config
/// hash, timings). CSV bodies depend only on (config, seed), not on worker
/// count or wall time.
RunOutcome run_experiments(const RunConfig& config, const RunOptions& options);

/// Deterministic shortest-round-trip decimal formatting used for every
/// number the runner writes.
std::string format_double(double value);

/// FNV-1a checksum of a file's bytes, as written to the manifest.
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace imlab
