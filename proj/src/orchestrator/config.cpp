#include "sprobe/orchestrator/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "sprobe/error.hpp"

namespace sprobe::orchestrator {

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::ConfigError, message); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

CorruptionChoice parse_choice_string(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) config_error("corruption '" + std::string(text) + "' must be kind@severity");
  try {
    return {corruption::parse_kind(text.substr(0, at)),
            corruption::parse_severity(std::stod(std::string(text.substr(at + 1))))};
  } catch (const std::invalid_argument&) {
    config_error("bad severity in '" + std::string(text) + "'");
  } catch (const Error& e) {
    config_error(e.what());
  }
}

std::vector<CorruptionChoice> all_corruptions() {
  std::vector<CorruptionChoice> out;
  for (int k = 0; k < corruption::kKindCount; ++k) {
    for (auto s : corruption::kSeverities) out.push_back({static_cast<corruption::Kind>(k), s});
  }
  return out;
}

template <class T>
T required(const toml::table& t, std::string_view key, std::string_view where) {
  const auto v = t[key].value<T>();
  if (!v) config_error(std::string(where) + " is missing '" + std::string(key) + "'");
  return *v;
}

}  // namespace

std::string_view role_name(DatasetRole role) {
  switch (role) {
    case DatasetRole::eval: return "eval";
    case DatasetRole::anchor_known: return "anchor_known";
    case DatasetRole::anchor_unknown: return "anchor_unknown";
    case DatasetRole::demographic_target: return "demographic_target";
  }
  return "eval";
}

ExperimentConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error: " << e.description() << " at " << e.source().begin;
    config_error(msg.str());
  }

  ExperimentConfig cfg;
  if (const auto* arr = root["estimators"].as_array()) {
    for (const auto& node : *arr) {
      const auto* t = node.as_table();
      if (!t) config_error("estimators entries must be tables");
      EstimatorConfig e;
      e.name = required<std::string>(*t, "name", "estimator");
      const auto role = (*t)["role"].value_or<std::string>("f");
      if (role == "f") e.role = EstimatorRole::f;
      else if (role == "g") e.role = EstimatorRole::g;
      else config_error("estimator role must be f or g, got '" + role + "'");
      auto& h = e.handle;
      h.endpoint = (*t)["endpoint"].value_or(h.endpoint);
      h.model_id = (*t)["model_id"].value_or(e.name);
      h.prompt = (*t)["prompt"].value_or(h.prompt);
      h.max_tokens = static_cast<int>((*t)["max_tokens"].value_or<std::int64_t>(h.max_tokens));
      h.temperature = (*t)["temperature"].value_or(h.temperature);
      h.timeout = std::chrono::milliseconds((*t)["timeout_ms"].value_or<std::int64_t>(h.timeout.count()));
      h.retry.attempts = static_cast<int>((*t)["retry_budget"].value_or<std::int64_t>(h.retry.attempts));
      h.concurrency_limit =
          static_cast<int>((*t)["concurrency_limit"].value_or<std::int64_t>(h.concurrency_limit));
      cfg.estimators.push_back(std::move(e));
    }
  }
  if (const auto* arr = root["datasets"].as_array()) {
    for (const auto& node : *arr) {
      const auto* t = node.as_table();
      if (!t) config_error("datasets entries must be tables");
      DatasetConfig d;
      d.name = required<std::string>(*t, "name", "dataset");
      d.path = resolve(base_dir, required<std::string>(*t, "path", "dataset '" + d.name + "'"));
      const auto role = (*t)["role"].value_or<std::string>("eval");
      if (role == "eval") d.role = DatasetRole::eval;
      else if (role == "anchor_known") d.role = DatasetRole::anchor_known;
      else if (role == "anchor_unknown") d.role = DatasetRole::anchor_unknown;
      else if (role == "demographic_target") d.role = DatasetRole::demographic_target;
      else config_error("unknown dataset role '" + role + "'");
      cfg.datasets.push_back(std::move(d));
    }
  }

  const auto& corr = root["corruptions"];
  if (const auto s = corr.value<std::string>()) {
    if (*s == "all") cfg.corruptions = all_corruptions();
    else cfg.corruptions.push_back(parse_choice_string(*s));
  } else if (const auto* arr = corr.as_array()) {
    for (const auto& node : *arr) {
      if (const auto s = node.value<std::string>()) {
        cfg.corruptions.push_back(parse_choice_string(*s));
      } else if (const auto* t = node.as_table()) {
        const auto kind = required<std::string>(*t, "kind", "corruption");
        const auto sev = (*t)["severity"].value<double>();
        if (!sev) config_error("corruption '" + kind + "' is missing severity");
        try {
          cfg.corruptions.push_back({corruption::parse_kind(kind), corruption::parse_severity(*sev)});
        } catch (const Error& e) {
          config_error(e.what());
        }
      } else {
        config_error("corruptions entries must be strings or tables");
      }
    }
  }

  if (const auto* seeds = root["seeds"].as_table()) {
    cfg.corruption_seed = static_cast<std::uint64_t>((*seeds)["corruption_seed"].value_or<std::int64_t>(0));
    cfg.subsample_seed = static_cast<std::uint64_t>((*seeds)["subsample_seed"].value_or<std::int64_t>(0));
  }
  if (const auto* steering = root["steering"].as_table()) {
    cfg.steering_enabled = (*steering)["enabled"].value_or(false);
    if (const auto a = (*steering)["alpha"].value<double>()) cfg.alpha = *a;
  }
  if (const auto out = root["output_dir"].value<std::string>()) cfg.output_dir = resolve(base_dir, *out);
  if (const auto cache = root["cache_dir"].value<std::string>()) cfg.cache_dir = resolve(base_dir, *cache);
  cfg.concurrency_limit = static_cast<int>(root["concurrency_limit"].value_or<std::int64_t>(cfg.concurrency_limit));
  cfg.failure_budget = root["failure_budget"].value_or(cfg.failure_budget);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

void ExperimentConfig::validate() const {
  if (estimators.empty()) config_error("at least one estimator is required");
  if (datasets.empty()) config_error("at least one dataset is required");
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    for (std::size_t j = i + 1; j < estimators.size(); ++j) {
      if (estimators[i].name == estimators[j].name) config_error("duplicate estimator '" + estimators[i].name + "'");
    }
    try {
      estimators[i].handle.validate();
    } catch (const Error& e) {
      config_error("estimator '" + estimators[i].name + "': " + e.what());
    }
  }
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    for (std::size_t j = i + 1; j < datasets.size(); ++j) {
      if (datasets[i].name == datasets[j].name && datasets[i].role == datasets[j].role) {
        config_error("duplicate dataset '" + datasets[i].name + "'");
      }
    }
  }
  if (steering_enabled && !alpha) config_error("steering.alpha is required when steering is enabled");
  if (alpha && !std::isfinite(*alpha)) config_error("steering.alpha must be finite");
  if (concurrency_limit < 1) config_error("concurrency_limit must be >= 1");
  if (!(failure_budget >= 0.0 && failure_budget <= 1.0)) config_error("failure_budget must be in [0,1]");
}

std::filesystem::path ExperimentConfig::effective_cache_dir() const {
  return cache_dir ? *cache_dir : output_dir / "cache";
}

std::vector<const EstimatorConfig*> ExperimentConfig::estimators_with(EstimatorRole role) const {
  std::vector<const EstimatorConfig*> out;
  for (const auto& e : estimators) {
    if (e.role == role) out.push_back(&e);
  }
  return out;
}

std::vector<const DatasetConfig*> ExperimentConfig::datasets_with(DatasetRole role) const {
  std::vector<const DatasetConfig*> out;
  for (const auto& d : datasets) {
    if (d.role == role) out.push_back(&d);
  }
  return out;
}

void apply_environment(ExperimentConfig& config) {
  if (const char* endpoint = std::getenv(kEnvEndpoint); endpoint && *endpoint) {
    for (auto& e : config.estimators) e.handle.endpoint = endpoint;
  }
  if (const char* cache = std::getenv(kEnvCacheDir); cache && *cache) config.cache_dir = cache;
}

void apply_overrides(ExperimentConfig& config, const Overrides& o) {
  if (o.endpoint) {
    for (auto& e : config.estimators) e.handle.endpoint = *o.endpoint;
  }
  if (o.output_dir) config.output_dir = *o.output_dir;
  if (o.cache_dir) config.cache_dir = *o.cache_dir;
  if (o.concurrency_limit) config.concurrency_limit = *o.concurrency_limit;
  if (o.alpha) config.alpha = *o.alpha;
  config.validate();
}

void ensure_output_dir(const ExperimentConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) config_error("cannot create output_dir " + config.output_dir.string() + ": " + ec.message());
  const auto probe = config.output_dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) config_error("output_dir " + config.output_dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

}  // namespace sprobe::orchestrator
