#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sprobe/image.hpp"

// JSON wire protocol shared by the harness and estimator services:
//   POST /v1/estimate     {image_b64, prompt, max_tokens, temperature, steering?} -> {text}
//   POST /v1/identify     {image_b64, prompt} -> {text}
//   POST /v1/activations  {image_b64, prompt} -> {layers, token_position}
//   GET  /v1/model_info   -> {model_id, num_layers, hidden_dim, supports_steering}
namespace sprobe::gateway {

inline constexpr const char* kEstimatePath = "/v1/estimate";
inline constexpr const char* kIdentifyPath = "/v1/identify";
inline constexpr const char* kActivationsPath = "/v1/activations";
inline constexpr const char* kModelInfoPath = "/v1/model_info";

using Json = nlohmann::json;

struct SteeringPayload {
  std::vector<float> vector;
  double alpha = 3.0;
};

struct EstimateRequest {
  std::string image_b64;
  std::string prompt;
  int max_tokens = 10;
  double temperature = 0.0;
  std::optional<SteeringPayload> steering;
};

struct PromptRequest {
  std::string image_b64;
  std::string prompt;
};

struct ModelInfo {
  std::string model_id;
  int num_layers = 0;
  int hidden_dim = 0;
  bool supports_steering = false;

  int layers_used() const noexcept { return num_layers / 2; }
  bool operator==(const ModelInfo&) const = default;
};

struct ActivationDump {
  std::vector<std::vector<double>> layers;  // layers 1..floor(L/2), each hidden_dim long
  int token_position = 0;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

// 8-bit PNG, base64. Throws ImageEncodeError.
std::string encode_image_b64(const Image& image);
// Throws ProtocolError.
Image decode_image_b64(std::string_view b64);

Json to_json(const EstimateRequest& req);
Json to_json(const PromptRequest& req);
Json to_json(const ModelInfo& info);
Json to_json(const ActivationDump& dump);

// Parsers throw ProtocolError on missing or mistyped fields.
EstimateRequest parse_estimate_request(const Json& body);
PromptRequest parse_prompt_request(const Json& body);
ModelInfo parse_model_info(const Json& body);
ActivationDump parse_activations(const Json& body);
std::string parse_text_response(const Json& body);

}  // namespace sprobe::gateway
