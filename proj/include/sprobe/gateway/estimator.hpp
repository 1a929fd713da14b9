#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include "sprobe/gateway/protocol.hpp"
#include "sprobe/gateway/text.hpp"
#include "sprobe/image.hpp"

namespace sprobe::gateway {

struct RetryPolicy {
  int attempts = 3;  // total tries, including the first
  std::chrono::milliseconds initial_backoff{100};
  double multiplier = 2.0;
};

struct EstimatorHandle {
  std::string endpoint = "mock";  // "mock" or http://host:port
  std::string model_id = "mock";
  std::string prompt{kAgePrompt};
  int max_tokens = 10;
  double temperature = 0.0;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  int concurrency_limit = 4;

  // Throws ConfigError when an invariant does not hold.
  void validate() const;
};

struct AgeEstimate {
  static constexpr std::size_t kMaxStoredResponse = 4096;

  std::optional<int> age;  // nullopt marks a parse failure
  std::string raw_response;
  double latency_ms = 0.0;
  bool steered = false;

  bool parse_failure() const noexcept { return !age.has_value(); }
};

struct IdentityAnswer {
  std::optional<std::string> name;  // nullopt is the Unknown marker
  std::optional<bool> verified;

  bool unknown() const noexcept { return !name.has_value(); }
};

// Request/response carrier. Implementations map transport-level failures
// (unreachable, timeout, 5xx, 429) to TransportError so the client can retry
// them; 400 maps to ProtocolError and 409 to SteeringUnsupported.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Json post(const std::string& path, const Json& body) = 0;
  virtual Json get(const std::string& path) = 0;
};

class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string base_url, std::chrono::milliseconds timeout);
  Json post(const std::string& path, const Json& body) override;
  Json get(const std::string& path) override;

 private:
  std::string base_url_;
  std::chrono::milliseconds timeout_;
};

// "mock" resolves to an in-process mock backend; anything else is HTTP.
std::shared_ptr<Transport> make_transport(const EstimatorHandle& handle);

class EstimatorClient {
 public:
  explicit EstimatorClient(EstimatorHandle handle, std::shared_ptr<Transport> transport = nullptr);

  const EstimatorHandle& handle() const noexcept { return handle_; }

  // Steering requires the endpoint to advertise supports_steering.
  AgeEstimate estimate_age(const Image& image, const SteeringPayload* steering = nullptr) const;
  IdentityAnswer identify(const Image& image) const;
  bool verify_identity(const Image& image, std::string_view name) const;
  ActivationDump activations(const Image& image, std::string_view prompt) const;
  ActivationDump activations(const Image& image) const { return activations(image, handle_.prompt); }
  ModelInfo model_info() const;

  std::uint64_t requests_sent() const noexcept { return requests_.load(); }

 private:
  template <class Call>
  Json with_retries(Call&& call) const;

  EstimatorHandle handle_;
  std::shared_ptr<Transport> transport_;
  mutable std::counting_semaphore<1024> in_flight_;
  mutable std::atomic<std::uint64_t> requests_{0};
  mutable std::once_flag info_once_;
  mutable std::optional<ModelInfo> info_;
};

}  // namespace sprobe::gateway
