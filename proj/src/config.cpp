#include "imlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imlab/rng.hpp"

namespace imlab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw std::runtime_error("config field '" + field + "': " + what);
}

template <typename T>
T get_number(const json& j, const std::string& field, T fallback, bool required = false) {
  if (!j.contains(field)) {
    if (required) fail(field, "missing");
    return fallback;
  }
  if (!j.at(field).is_number()) fail(field, "expected a number");
  return j.at(field).get<T>();
}

std::vector<std::size_t> get_size_grid(const json& j, const std::string& field,
                                       std::vector<std::size_t> fallback) {
  if (!j.contains(field)) return fallback;
  if (!j.at(field).is_array()) fail(field, "expected an array");
  std::vector<std::size_t> out;
  for (const auto& x : j.at(field)) {
    if (!x.is_number_unsigned() && !x.is_number_integer()) fail(field, "expected integers");
    const auto v = x.get<long long>();
    if (v < 1) fail(field, "entries must be >= 1");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<double> get_double_grid(const json& j, const std::string& field,
                                    std::vector<double> fallback) {
  if (!j.contains(field)) return fallback;
  if (!j.at(field).is_array()) fail(field, "expected an array");
  std::vector<double> out;
  for (const auto& x : j.at(field)) {
    if (!x.is_number()) fail(field, "expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

BatteryConfig parse_concentration(const json& j) {
  BatteryConfig c;
  c.n_grid = get_size_grid(j, "n_grid", c.n_grid);
  c.trials = get_number<std::size_t>(j, "trials", c.trials);
  c.d_hat_safety = get_number<double>(j, "d_hat_safety", c.d_hat_safety);
  c.t_multipliers = get_double_grid(j, "t_multipliers", c.t_multipliers);
  if (j.contains("shadowing_set")) {
    c.shadowing_set.clear();
    for (const auto& pair : j.at("shadowing_set")) {
      if (!pair.is_array() || pair.size() != 2) fail("shadowing_set", "expected [lo, hi] pairs");
      c.shadowing_set.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
  }
  c.shadowing_epsilon = get_number<double>(j, "shadowing_epsilon", c.shadowing_epsilon);
  c.shadowing_candidates = get_number<int>(j, "shadowing_candidates", c.shadowing_candidates);
  c.quantile_atoms = get_number<int>(j, "quantile_atoms", c.quantile_atoms);
  c.omega_count = get_number<int>(j, "omega_count", c.omega_count);
  c.covariance_lags = get_number<int>(j, "covariance_lags", c.covariance_lags);
  c.certify_samples = get_number<int>(j, "certify_samples", c.certify_samples);
  return c;
}

AscltConfig parse_asclt(const json& j) {
  AscltConfig c;
  c.n_max = get_number<std::size_t>(j, "n_max", c.n_max);
  c.checkpoints = get_size_grid(j, "checkpoints", c.checkpoints);
  c.trials = get_number<std::size_t>(j, "trials", c.trials);
  c.covariance_lags = get_number<int>(j, "covariance_lags", c.covariance_lags);
  return c;
}

KdeConfig parse_kde(const json& j) {
  KdeConfig c;
  c.n_grid = get_size_grid(j, "n_grid", c.n_grid);
  c.bandwidth_exponent = get_number<double>(j, "bandwidth_exponent", c.bandwidth_exponent);
  c.explicit_bandwidths = get_double_grid(j, "bandwidths", c.explicit_bandwidths);
  c.trials = get_number<std::size_t>(j, "trials", c.trials);
  if (j.contains("kernel")) {
    const std::string k = j.at("kernel").get<std::string>();
    if (k == "triangular")
      c.kernel = KernelType::triangular;
    else if (k == "epanechnikov")
      c.kernel = KernelType::epanechnikov;
    else
      fail("kernel", "expected 'triangular' or 'epanechnikov'");
  }
  c.tail_t_factor = get_number<double>(j, "tail_t_factor", c.tail_t_factor);
  return c;
}

EmpiricalMeasureConfig parse_empirical(const json& j) {
  EmpiricalMeasureConfig c;
  c.n_grid = get_size_grid(j, "n_grid", c.n_grid);
  c.trials = get_number<std::size_t>(j, "trials", c.trials);
  c.quantile_atoms = get_number<int>(j, "quantile_atoms", c.quantile_atoms);
  return c;
}

PeriodogramConfig parse_periodogram(const json& j) {
  PeriodogramConfig c;
  c.n_grid = get_size_grid(j, "n_grid", c.n_grid);
  c.trials = get_number<std::size_t>(j, "trials", c.trials);
  c.omega_count = get_number<int>(j, "omega_count", c.omega_count);
  c.covariance_lags = get_number<int>(j, "covariance_lags", c.covariance_lags);
  return c;
}

ShadowingConfig parse_shadowing(const json& j) {
  ShadowingConfig c;
  if (j.contains("a_set")) {
    c.a_set.clear();
    for (const auto& pair : j.at("a_set")) {
      if (!pair.is_array() || pair.size() != 2) fail("a_set", "expected [lo, hi] pairs");
      c.a_set.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
  }
  c.n_grid = get_size_grid(j, "n_grid", c.n_grid);
  c.eps_grid = get_double_grid(j, "eps_grid", c.eps_grid);
  c.trials = get_number<std::size_t>(j, "trials", c.trials);
  c.y_candidates = get_number<int>(j, "y_candidates", c.y_candidates);
  return c;
}

}  // namespace

bool RunConfig::has_experiment(const std::string& name) const {
  if (name == "concentration") return concentration.has_value();
  if (name == "asclt") return asclt.has_value();
  if (name == "kde") return kde.has_value();
  if (name == "empirical_measure") return empirical_measure.has_value();
  if (name == "periodogram") return periodogram.has_value();
  if (name == "shadowing") return shadowing.has_value();
  return false;
}

std::vector<std::string> RunConfig::configured_experiments() const {
  std::vector<std::string> names;
  for (const char* name : {"concentration", "asclt", "kde", "empirical_measure",
                           "periodogram", "shadowing"})
    if (has_experiment(name)) names.emplace_back(name);
  return names;
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  if (j.contains("alpha")) {
    if (!j.at("alpha").is_number()) fail("alpha", "expected a number");
    c.alpha = j.at("alpha").get<double>();
    c.has_alpha = true;
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() && !j.at("seed").is_number_unsigned())
      fail("seed", "expected an integer");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.has_seed = true;
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("ulam")) {
    const auto& u = j.at("ulam");
    c.ulam_cells = get_number<int>(u, "cells", c.ulam_cells);
    if (u.contains("grid_scheme")) {
      const std::string s = u.at("grid_scheme").get<std::string>();
      if (s == "uniform")
        c.grid_scheme = GridScheme::uniform;
      else if (s == "markov_refined")
        c.grid_scheme = GridScheme::markov_refined;
      else
        fail("ulam.grid_scheme", "expected 'uniform' or 'markov_refined'");
    }
  }
  if (j.contains("cache")) {
    const auto& k = j.at("cache");
    if (k.contains("policy")) {
      const std::string p = k.at("policy").get<std::string>();
      if (p == "use")
        c.cache.policy = CacheConfig::Policy::use;
      else if (p == "rebuild")
        c.cache.policy = CacheConfig::Policy::rebuild;
      else if (p == "off")
        c.cache.policy = CacheConfig::Policy::off;
      else
        fail("cache.policy", "expected 'use', 'rebuild' or 'off'");
    }
    if (k.contains("dir")) c.cache.dir = k.at("dir").get<std::string>();
  }
  if (j.contains("experiments")) {
    const auto& e = j.at("experiments");
    if (!e.is_object()) fail("experiments", "expected an object");
    if (e.contains("concentration")) c.concentration = parse_concentration(e.at("concentration"));
    if (e.contains("asclt")) c.asclt = parse_asclt(e.at("asclt"));
    if (e.contains("kde")) c.kde = parse_kde(e.at("kde"));
    if (e.contains("empirical_measure"))
      c.empirical_measure = parse_empirical(e.at("empirical_measure"));
    if (e.contains("periodogram")) c.periodogram = parse_periodogram(e.at("periodogram"));
    if (e.contains("shadowing")) c.shadowing = parse_shadowing(e.at("shadowing"));
    for (const auto& [key, value] : e.items()) {
      (void)value;
      if (!c.has_experiment(key)) fail("experiments." + key, "unknown experiment");
    }
  }
  c.config_hash = hash_tag(j.dump());
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  return parse_config_text(buffer.str());
}

std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> errors;
  if (!c.has_alpha)
    errors.push_back("alpha: missing");
  else if (!(c.alpha > 0.0 && c.alpha < 1.0))
    errors.push_back("alpha: must lie in (0,1)");
  if (!c.has_seed) errors.push_back("seed: missing (no wall-clock default)");
  if (c.ulam_cells < 64) errors.push_back("ulam.cells: must be >= 64");
  if (c.output_dir.empty()) errors.push_back("output_dir: empty");

  const auto experiments = c.configured_experiments();
  if (experiments.empty()) errors.push_back("experiments: empty selection");

  if (c.concentration) {
    if (c.concentration->n_grid.empty()) errors.push_back("concentration.n_grid: empty");
    if (c.concentration->trials < 100)
      errors.push_back("concentration.trials: must be >= 100");
    if (!(c.concentration->d_hat_safety > 0.0))
      errors.push_back("concentration.d_hat_safety: must be positive");
  }
  if (c.asclt) {
    if (c.asclt->checkpoints.empty()) errors.push_back("asclt.checkpoints: empty");
    for (std::size_t cp : c.asclt->checkpoints)
      if (cp > c.asclt->n_max) errors.push_back("asclt.checkpoints: beyond n_max");
    if (c.asclt->trials < 1) errors.push_back("asclt.trials: must be >= 1");
    if (c.has_alpha && !(c.alpha < 0.5))
      errors.push_back("asclt: requires alpha < 1/2 (CLT hypothesis)");
  }
  if (c.kde) {
    if (c.kde->n_grid.empty()) errors.push_back("kde.n_grid: empty");
    std::vector<std::size_t> grid = c.kde->n_grid;
    std::sort(grid.begin(), grid.end());
    if (!c.kde->explicit_bandwidths.empty() &&
        c.kde->explicit_bandwidths.size() != grid.size())
      errors.push_back("kde.bandwidths: length must match n_grid");
    double prev_a = 2.0, prev_na = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double n = static_cast<double>(grid[i]);
      const double a = c.kde->explicit_bandwidths.empty()
                           ? std::pow(n, -c.kde->bandwidth_exponent)
                           : c.kde->explicit_bandwidths[i];
      if (!(a > 0.0 && a < 1.0)) {
        errors.push_back("kde: bandwidth outside (0,1)");
        break;
      }
      if (a > prev_a) {
        errors.push_back("kde: bandwidths must be nonincreasing (a_n -> 0)");
        break;
      }
      if (n * a <= prev_na) {
        errors.push_back("kde: n * a_n must be increasing (n a_n -> infinity)");
        break;
      }
      prev_a = a;
      prev_na = n * a;
    }
  }
  if (c.empirical_measure && c.empirical_measure->n_grid.empty())
    errors.push_back("empirical_measure.n_grid: empty");
  if (c.periodogram && c.periodogram->n_grid.empty())
    errors.push_back("periodogram.n_grid: empty");
  if (c.shadowing) {
    if (c.shadowing->a_set.empty()) errors.push_back("shadowing.a_set: empty");
    for (const auto& [lo, hi] : c.shadowing->a_set)
      if (!(hi > lo) || lo < 0.0 || hi > 1.0)
        errors.push_back("shadowing.a_set: intervals must be nondegenerate within [0,1]");
    if (c.shadowing->eps_grid.empty()) errors.push_back("shadowing.eps_grid: empty");
    for (double e : c.shadowing->eps_grid)
      if (!(e > 0.0)) errors.push_back("shadowing.eps_grid: entries must be positive");
    if (c.shadowing->y_candidates < 2)
      errors.push_back("shadowing.y_candidates: must be >= 2");
  }
  return errors;
}

}  // namespace imlab
