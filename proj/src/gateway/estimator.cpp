#include "sprobe/gateway/estimator.hpp"

#include <httplib.h>

#include <algorithm>
#include <thread>

#include <spdlog/spdlog.h>

#include "sprobe/error.hpp"
#include "sprobe/gateway/mock.hpp"

namespace sprobe::gateway {

namespace {

Json handle_response(const httplib::Result& res, const std::string& path) {
  if (!res) {
    throw Error(ErrorCode::TransportError, path + ": " + httplib::to_string(res.error()));
  }
  return decode_reply(res->status, res->body, path);
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

void EstimatorHandle::validate() const {
  if (endpoint.empty()) throw Error(ErrorCode::ConfigError, "estimator endpoint is empty");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::ConfigError, "temperature must be >= 0");
  if (max_tokens < 1) throw Error(ErrorCode::ConfigError, "max_tokens must be >= 1");
  if (prompt.empty()) throw Error(ErrorCode::ConfigError, "prompt must be non-empty");
  if (retry.attempts < 1) throw Error(ErrorCode::ConfigError, "retry budget must be >= 1");
  if (concurrency_limit < 1 || concurrency_limit > 1024) {
    throw Error(ErrorCode::ConfigError, "concurrency limit must be in [1, 1024]");
  }
}

HttpTransport::HttpTransport(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {}

Json HttpTransport::post(const std::string& path, const Json& body) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  auto res = client.Post(path, body.dump(), "application/json");
  return handle_response(res, path);
}

Json HttpTransport::get(const std::string& path) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  auto res = client.Get(path);
  return handle_response(res, path);
}

std::shared_ptr<Transport> make_transport(const EstimatorHandle& handle) {
  if (handle.endpoint == "mock") return std::make_shared<InProcessTransport>(std::make_shared<MockBackend>());
  return std::make_shared<HttpTransport>(handle.endpoint, handle.timeout);
}

EstimatorClient::EstimatorClient(EstimatorHandle handle, std::shared_ptr<Transport> transport)
    : handle_(std::move(handle)),
      transport_(transport ? std::move(transport) : make_transport(handle_)),
      in_flight_(handle_.concurrency_limit) {
  handle_.validate();
}

template <class Call>
Json EstimatorClient::with_retries(Call&& call) const {
  auto backoff = handle_.retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      SemaphoreGuard guard(in_flight_);
      requests_.fetch_add(1);
      return call();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError || attempt >= handle_.retry.attempts) throw;
      spdlog::debug("{}: attempt {} failed ({}), retrying", handle_.endpoint, attempt, e.what());
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<std::int64_t>(static_cast<double>(backoff.count()) * handle_.retry.multiplier));
  }
}

ModelInfo EstimatorClient::model_info() const {
  std::call_once(info_once_, [this] {
    info_ = parse_model_info(with_retries([&] { return transport_->get(kModelInfoPath); }));
  });
  return *info_;
}

AgeEstimate EstimatorClient::estimate_age(const Image& image, const SteeringPayload* steering) const {
  if (steering && !model_info().supports_steering) {
    throw Error(ErrorCode::SteeringUnsupported, handle_.endpoint + " does not advertise steering support");
  }
  EstimateRequest req;
  req.image_b64 = encode_image_b64(image);
  req.prompt = handle_.prompt;
  req.max_tokens = handle_.max_tokens;
  req.temperature = handle_.temperature;
  if (steering) req.steering = *steering;
  const Json body = to_json(req);

  const auto start = std::chrono::steady_clock::now();
  const Json res = with_retries([&] { return transport_->post(kEstimatePath, body); });
  const auto stop = std::chrono::steady_clock::now();

  AgeEstimate out;
  out.raw_response = parse_text_response(res);
  out.age = parse_age_response(out.raw_response);
  if (out.raw_response.size() > AgeEstimate::kMaxStoredResponse) out.raw_response.resize(AgeEstimate::kMaxStoredResponse);
  out.latency_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  out.steered = steering != nullptr;
  return out;
}

IdentityAnswer EstimatorClient::identify(const Image& image) const {
  const Json body = to_json(PromptRequest{encode_image_b64(image), std::string(kIdentifyPrompt)});
  const std::string text = parse_text_response(with_retries([&] { return transport_->post(kIdentifyPath, body); }));
  IdentityAnswer answer;
  if (!is_unknown_answer(text)) answer.name = text;
  return answer;
}

bool EstimatorClient::verify_identity(const Image& image, std::string_view name) const {
  if (name.empty()) throw Error(ErrorCode::ConfigError, "verify_identity needs a non-empty name");
  const Json body = to_json(PromptRequest{encode_image_b64(image), verify_prompt(name)});
  return is_affirmative(parse_text_response(with_retries([&] { return transport_->post(kIdentifyPath, body); })));
}

ActivationDump EstimatorClient::activations(const Image& image, std::string_view prompt) const {
  const Json body = to_json(PromptRequest{encode_image_b64(image), std::string(prompt)});
  return parse_activations(with_retries([&] { return transport_->post(kActivationsPath, body); }));
}

}  // namespace sprobe::gateway
