#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sprobe/corruption/catalog.hpp"
#include "sprobe/gateway/estimator.hpp"

namespace sprobe::orchestrator {

enum class EstimatorRole { f, g };
enum class DatasetRole { eval, anchor_known, anchor_unknown, demographic_target };

std::string_view role_name(DatasetRole role);

struct EstimatorConfig {
  std::string name;
  EstimatorRole role = EstimatorRole::f;
  gateway::EstimatorHandle handle;
};

struct DatasetConfig {
  std::string name;
  std::filesystem::path path;
  DatasetRole role = DatasetRole::eval;
};

struct CorruptionChoice {
  corruption::Kind kind;
  corruption::Severity severity;
  bool operator==(const CorruptionChoice&) const = default;
};

struct ExperimentConfig {
  std::vector<EstimatorConfig> estimators;
  std::vector<DatasetConfig> datasets;
  std::vector<CorruptionChoice> corruptions;
  std::uint64_t corruption_seed = 0;
  std::uint64_t subsample_seed = 0;
  bool steering_enabled = false;
  std::optional<double> alpha;
  std::filesystem::path output_dir = "shortcut-probe-out";
  std::optional<std::filesystem::path> cache_dir;  // default: output_dir/cache
  int concurrency_limit = 4;
  double failure_budget = 0.1;  // abort when more than this fraction of requests fail

  // Throws ConfigError.
  void validate() const;
  std::filesystem::path effective_cache_dir() const;
  std::vector<const EstimatorConfig*> estimators_with(EstimatorRole role) const;
  std::vector<const DatasetConfig*> datasets_with(DatasetRole role) const;
};

// Relative paths resolve against base_dir. Throws ConfigError.
ExperimentConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

inline constexpr const char* kEnvEndpoint = "SHORTCUT_PROBE_ENDPOINT";
inline constexpr const char* kEnvCacheDir = "SHORTCUT_PROBE_CACHE_DIR";
inline constexpr const char* kEnvLogLevel = "SHORTCUT_PROBE_LOG_LEVEL";

// Command-line overrides; applied after the environment, so flags win.
struct Overrides {
  std::optional<std::string> endpoint;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<int> concurrency_limit;
  std::optional<double> alpha;
};

void apply_environment(ExperimentConfig& config);
void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

// Creates output_dir and probes it for writing. Throws ConfigError.
void ensure_output_dir(const ExperimentConfig& config);

}  // namespace sprobe::orchestrator
