#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "whittle/belief.hpp"
#include "whittle/simulator.hpp"

namespace whittle {

inline constexpr const char* kVersion = "0.1.0";

/// Schema, value or usage problem in an experiment config (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentParams {
  std::vector<long> N{1000};
  long horizon = 10000;
  /// Negative: horizon / 10.
  long burn_in = -1;
  std::vector<std::uint64_t> seeds{1};
  double epsilon = 0.005;
  /// Any of "x" (all OFF observed), "y" (all stationary), "zeta",
  /// "near-zeta" (zeta moved by `delta` along a seeded direction).
  std::vector<std::string> starts{"x"};
  Policy policy = Policy::Whittle;
  long max_t = 100000;
  /// Fluid iterations for fluid-run.
  long steps = 10000;
  double delta = 1e-3;
  /// "hitting-time" or "throughput-gap".
  std::string sweep = "hitting-time";
  /// Whether pipeline also runs the simulation checks.
  bool simulate = false;
};

struct ExperimentConfig {
  std::string name;
  ClassMix mix;
  ExperimentParams exp;
  std::string out_dir = ".";
};

/// Parse and validate; unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Canonical JSON form (sorted keys, defaults filled in).
nlohmann::json to_json(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);
std::string config_hash(const ExperimentConfig& cfg);

/// "1,2,5" -> {1, 2, 5}; throws ConfigError.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

std::string policy_name(Policy p);

}  // namespace whittle
