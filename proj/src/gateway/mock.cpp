#include "sprobe/gateway/mock.hpp"

#include <httplib.h>

#include <cmath>
#include <string>

#include "sprobe/error.hpp"
#include "sprobe/gateway/text.hpp"
#include "sprobe/numeric.hpp"

namespace sprobe::gateway {

namespace {

MockReply json_reply(const Json& body) { return {200, body.dump()}; }

MockReply error_reply(int status, const std::string& message) {
  return {status, Json{{"error", message}}.dump()};
}

// Extracts NAME from the cross-check prompt, or nullopt for other prompts.
std::optional<std::string> verify_name(const std::string& prompt) {
  const std::string tmpl(kVerifyPromptTemplate);
  const auto slot = tmpl.find("NAME");
  const std::string prefix = tmpl.substr(0, slot);
  const std::string suffix = tmpl.substr(slot + 4);
  if (prompt.size() < prefix.size() + suffix.size()) return std::nullopt;
  if (!prompt.starts_with(prefix) || !prompt.ends_with(suffix)) return std::nullopt;
  return prompt.substr(prefix.size(), prompt.size() - prefix.size() - suffix.size());
}

}  // namespace

int mock_estimate(const Image& image) {
  return 1 + static_cast<int>(std::floor(mean_intensity(image) * 99.0));
}

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)), failures_left_(config_.fail_first) {}

ModelInfo MockBackend::info() const {
  return {config_.model_id, config_.num_layers, config_.hidden_dim, config_.supports_steering};
}

std::uint64_t MockBackend::request_count(const std::string& path) const {
  std::lock_guard lock(counts_mutex_);
  const auto it = per_path_.find(path);
  return it == per_path_.end() ? 0 : it->second;
}

void MockBackend::reset_counts() {
  std::lock_guard lock(counts_mutex_);
  per_path_.clear();
  requests_ = 0;
}

ActivationDump MockBackend::activations_for(const Image& image, int num_layers, int hidden_dim) {
  std::array<double, 3> means{};
  for (int c = 0; c < 3; ++c) {
    KahanSum sum;
    for (std::size_t i = static_cast<std::size_t>(c); i < image.size(); i += 3) sum.add(image.data()[i]);
    means[static_cast<std::size_t>(c)] = sum.value() / static_cast<double>(image.pixel_count());
  }
  ActivationDump dump;
  dump.token_position = 0;
  for (int layer = 1; layer <= num_layers / 2; ++layer) {
    std::vector<double> unit(static_cast<std::size_t>(hidden_dim));
    for (int j = 0; j < hidden_dim; ++j) {
      unit[static_cast<std::size_t>(j)] = layer * means[static_cast<std::size_t>(j % 3)] + 0.01 * j;
    }
    dump.layers.push_back(std::move(unit));
  }
  return dump;
}

MockReply MockBackend::handle(const std::string& method, const std::string& path, const std::string& body) {
  requests_.fetch_add(1);
  {
    std::lock_guard lock(counts_mutex_);
    ++per_path_[path];
  }
  if (failures_left_.load() > 0 && failures_left_.fetch_sub(1) > 0) {
    return error_reply(503, "injected failure");
  }
  try {
    if (method == "GET" && path == kModelInfoPath) return json_reply(to_json(info()));
    if (method != "POST") return error_reply(405, "method not allowed");
    Json parsed;
    try {
      parsed = Json::parse(body);
    } catch (const Json::exception& e) {
      return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    if (path == kEstimatePath) return estimate(parsed);
    if (path == kIdentifyPath) return identify(parsed);
    if (path == kActivationsPath) return activations(parsed);
    return error_reply(404, "no route " + path);
  } catch (const Error& e) {
    return error_reply(e.code() == ErrorCode::ProtocolError ? 400 : 500, e.what());
  }
}

MockReply MockBackend::estimate(const Json& body) {
  const EstimateRequest req = parse_estimate_request(body);
  if (req.prompt.empty()) return error_reply(400, "empty prompt");
  const Image image = decode_image_b64(req.image_b64);
  int age = config_.age ? config_.age(image) : mock_estimate(image);
  if (req.steering) {
    if (!config_.supports_steering) return error_reply(409, "steering unsupported");
    const std::size_t expected = static_cast<std::size_t>(config_.num_layers / 2) * config_.hidden_dim;
    if (req.steering->vector.size() != expected) {
      return error_reply(400, "steering dimension " + std::to_string(req.steering->vector.size()) +
                                  " != " + std::to_string(expected));
    }
    KahanSum sum;
    for (float v : req.steering->vector) sum.add(v);
    const double mean = expected ? sum.value() / static_cast<double>(expected) : 0.0;
    age += static_cast<int>(std::lround(req.steering->alpha * mean));
  }
  return json_reply({{"text", std::to_string(age)}});
}

MockReply MockBackend::identify(const Json& body) {
  const PromptRequest req = parse_prompt_request(body);
  if (req.prompt.empty()) return error_reply(400, "empty prompt");
  const Image image = decode_image_b64(req.image_b64);
  std::string text = "Unknown";
  if (auto name = verify_name(req.prompt)) {
    text = config_.verify ? config_.verify(image, *name) : "No";
  } else if (config_.identify) {
    text = config_.identify(image);
  }
  return json_reply({{"text", text}});
}

MockReply MockBackend::activations(const Json& body) {
  const PromptRequest req = parse_prompt_request(body);
  if (req.prompt.empty()) return error_reply(400, "empty prompt");
  const Image image = decode_image_b64(req.image_b64);
  return json_reply(to_json(activations_for(image, config_.num_layers, config_.hidden_dim)));
}

Json decode_reply(int status, const std::string& body, const std::string& path) {
  if (status == 200) {
    try {
      return Json::parse(body);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::ProtocolError, path + ": response is not JSON: " + e.what());
    }
  }
  const std::string detail = path + " returned HTTP " + std::to_string(status) + ": " + body;
  if (status == 409) throw Error(ErrorCode::SteeringUnsupported, detail);
  if (status == 429 || status >= 500) throw Error(ErrorCode::TransportError, detail);
  throw Error(ErrorCode::ProtocolError, detail);
}

Json InProcessTransport::post(const std::string& path, const Json& body) {
  const MockReply reply = backend_->handle("POST", path, body.dump());
  return decode_reply(reply.status, reply.body, path);
}

Json InProcessTransport::get(const std::string& path) {
  const MockReply reply = backend_->handle("GET", path, "");
  return decode_reply(reply.status, reply.body, path);
}

struct MockServer::Impl {
  httplib::Server server;
};

MockServer::MockServer(std::shared_ptr<MockBackend> backend, int port)
    : backend_(std::move(backend)), impl_(std::make_unique<Impl>()) {
  const auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const MockReply reply = backend_->handle(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  };
  impl_->server.Get(kModelInfoPath, route);
  impl_->server.Post(kEstimatePath, route);
  impl_->server.Post(kIdentifyPath, route);
  impl_->server.Post(kActivationsPath, route);
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    port_ = impl_->server.bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (port_ <= 0) throw Error(ErrorCode::TransportError, "mock server could not bind");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockServer::~MockServer() { stop(); }

void MockServer::wait() {
  if (thread_.joinable()) thread_.join();
}

void MockServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace sprobe::gateway
