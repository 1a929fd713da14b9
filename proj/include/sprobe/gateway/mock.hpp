#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <array>

#include "sprobe/gateway/estimator.hpp"
#include "sprobe/gateway/protocol.hpp"
#include "sprobe/image.hpp"

namespace sprobe::gateway {

// Deterministic stand-in estimator: 1 + floor(mean intensity * 99).
int mock_estimate(const Image& image);

struct MockConfig {
  std::string model_id = "mock";
  int num_layers = 4;
  int hidden_dim = 8;
  bool supports_steering = true;
  // Respond 503 to the first N requests (retry tests).
  int fail_first = 0;
  // Overrides; defaults answer the age with mock_estimate, identity with
  // "Unknown" and verification with "No".
  std::function<int(const Image&)> age;
  std::function<std::string(const Image&)> identify;
  std::function<std::string(const Image&, const std::string& name)> verify;
};

struct MockReply {
  int status = 200;
  std::string body;
};

// Protocol implementation behind the mock endpoint. A steering payload of the
// right dimension shifts the age by round(alpha * mean(vector)), so alpha = 0
// and zero vectors are exact no-ops. Activations are a closed-form function
// of per-channel means: layer l, unit j -> l * mean(channel j % 3) + 0.01 * j.
class MockBackend {
 public:
  explicit MockBackend(MockConfig config = {});

  MockReply handle(const std::string& method, const std::string& path, const std::string& body);

  ModelInfo info() const;
  std::uint64_t request_count() const noexcept { return requests_.load(); }
  std::uint64_t request_count(const std::string& path) const;
  void reset_counts();

  static ActivationDump activations_for(const Image& image, int num_layers, int hidden_dim);

 private:
  MockReply estimate(const Json& body);
  MockReply identify(const Json& body);
  MockReply activations(const Json& body);

  MockConfig config_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<int> failures_left_;
  mutable std::mutex counts_mutex_;
  std::unordered_map<std::string, std::uint64_t> per_path_;
};

// Maps a status/body pair onto the client error contract.
Json decode_reply(int status, const std::string& body, const std::string& path);

class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(std::shared_ptr<MockBackend> backend) : backend_(std::move(backend)) {}
  Json post(const std::string& path, const Json& body) override;
  Json get(const std::string& path) override;
  MockBackend& backend() noexcept { return *backend_; }

 private:
  std::shared_ptr<MockBackend> backend_;
};

// Serves a MockBackend over HTTP on 127.0.0.1 from a background thread.
class MockServer {
 public:
  explicit MockServer(std::shared_ptr<MockBackend> backend, int port = 0);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const noexcept { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  MockBackend& backend() noexcept { return *backend_; }

  // Blocks until stop() is called from another thread (CLI use).
  void wait();
  void stop();

 private:
  struct Impl;
  std::shared_ptr<MockBackend> backend_;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace sprobe::gateway
