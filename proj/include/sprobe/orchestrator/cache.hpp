#pragma once

#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "sprobe/gateway/protocol.hpp"

namespace sprobe::orchestrator {

// Lowercase hex BLAKE2b-256.
std::string blake2b_hex(std::string_view data);
std::string blake2b_hex(std::span<const std::uint8_t> data);

// "none" without steering; otherwise a hash over alpha and the direction bits.
std::string steering_fingerprint(const gateway::SteeringPayload* steering);

struct CacheKeyParts {
  std::string estimator;  // estimator identity (model, prompt, decoding)
  std::string image;      // dataset/id
  std::string corruption; // "clean" or "kind@severity#seed"
  std::string steering;   // steering_fingerprint(...)
  std::string request;    // "age" or "activations"
};

std::string cache_key(const CacheKeyParts& parts);

// Append-only JSON Lines log ("cache.log") holding {"k": key, "v": value}
// records, indexed in memory on open. Later records for a key win. A torn
// final line (crash mid-append) is dropped and truncated away. Writes are
// serialized and flushed line by line.
class RunCache {
 public:
  explicit RunCache(const std::filesystem::path& dir);
  ~RunCache();
  RunCache(const RunCache&) = delete;
  RunCache& operator=(const RunCache&) = delete;

  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& value);

  std::size_t size() const;
  std::size_t dropped_lines() const noexcept { return dropped_; }
  const std::filesystem::path& log_path() const noexcept { return log_path_; }

 private:
  std::filesystem::path log_path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, nlohmann::json> index_;
  std::FILE* out_ = nullptr;
  std::size_t dropped_ = 0;
};

}  // namespace sprobe::orchestrator
