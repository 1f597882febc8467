#pragma once

#include "matchbandits/environments.hpp"
#include "matchbandits/policies.hpp"
#include "matchbandits/regret.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace matchbandits {

inline constexpr int kSchemaVersion = 1;
inline constexpr int kDefaultReplicas = 10;
inline constexpr long kDefaultHorizon = 100000;
inline constexpr double kDefaultNoiseScale = 0.1;

struct MarketSpec {
  /// Explicit market; when unset one is drawn with random_market.
  std::optional<MarketInstance> instance;
  int n_players = 4;
  int n_arms = 4;
  int dim = 3;
  /// Defaults to the experiment seed.
  std::optional<std::uint64_t> seed;
};

struct PolicySpec {
  /// Output directory name; defaults to the kind ("barb", "etc", ...).
  std::string label;
  /// `horizon` and `seed` are filled in per run.
  PolicyConfig config;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  long horizon = kDefaultHorizon;
  int replicas = kDefaultReplicas;
  MarketSpec market;
  EnvSpec environment = StochasticEnvSpec{};
  std::vector<PolicySpec> policies;
  RegretSpec regret;
  /// Pairs of policy labels (a, b); each writes a cumulative reward difference a - b.
  std::vector<std::pair<std::string, std::string>> compare;
  std::filesystem::path output = "out";
  /// Field paths whose values came from our own defaults rather than the file.
  std::vector<std::string> defaulted;
};

/// Parses and validates an experiment. Unknown keys and bad values raise
/// ConfigError naming the field path.
ExperimentConfig parse_experiment(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& file);

/// Canonical JSON form; parse_experiment(experiment_to_json(c)) reproduces c.
nlohmann::json experiment_to_json(const ExperimentConfig& config);

nlohmann::json env_to_json(const EnvSpec& env);
EnvSpec env_from_json(const nlohmann::json& j, const std::string& path = "environment");

/// The market an experiment runs on (drawn from its seed unless explicit).
MarketInstance build_market(const ExperimentConfig& config);

/// Parses a JSON file, mapping I/O and syntax errors to ConfigError.
nlohmann::json read_json(const std::filesystem::path& file);

/// Input of the gap diagnostics: a market and a stochastic environment.
struct GapConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  long horizon = kDefaultHorizon;
  long samples = 1000000;
  MarketSpec market;
  StochasticEnvSpec environment;
};

/// Keys: schema_version, seed, horizon, samples, market (optional) and environment.
GapConfig parse_gap_config(const nlohmann::json& j);
GapConfig load_gap_config(const std::filesystem::path& file);
MarketInstance build_market(const GapConfig& config);

/// Sets the value at a dotted path such as "policies.0.initial_gap", creating
/// object members as needed.
void set_json_path(nlohmann::json& j, const std::string& path, nlohmann::json value);

}  // namespace matchbandits
