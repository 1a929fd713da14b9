#include "sprobe/gateway/protocol.hpp"

#include <sodium.h>

#include <string>

#include "sprobe/error.hpp"
#include "sprobe/image_io.hpp"

namespace sprobe::gateway {

namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) throw Error(ErrorCode::IoError, "libsodium initialisation failed");
}

template <class T>
T field(const Json& body, const char* name) {
  if (!body.is_object() || !body.contains(name)) {
    throw Error(ErrorCode::ProtocolError, std::string("missing field '") + name + "'");
  }
  try {
    return body.at(name).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("field '") + name + "': " + e.what());
  }
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  ensure_sodium();
  const std::size_t len = sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(len, '\0');
  sodium_bin2base64(out.data(), len, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(len - 1);  // drop terminating NUL
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  ensure_sodium();
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw Error(ErrorCode::ProtocolError, "invalid base64 payload");
  }
  out.resize(len);
  return out;
}

std::string encode_image_b64(const Image& image) {
  return base64_encode(io::encode_png(image, io::PngDepth::u8));
}

Image decode_image_b64(std::string_view b64) {
  const auto bytes = base64_decode(b64);
  try {
    return io::decode_png(bytes);
  } catch (const Error& e) {
    throw Error(ErrorCode::ProtocolError, std::string("image_b64: ") + e.what());
  }
}

Json to_json(const EstimateRequest& req) {
  Json body = {{"image_b64", req.image_b64},
               {"prompt", req.prompt},
               {"max_tokens", req.max_tokens},
               {"temperature", req.temperature}};
  if (req.steering) {
    body["steering"] = {{"vector", req.steering->vector}, {"alpha", req.steering->alpha}};
  }
  return body;
}

Json to_json(const PromptRequest& req) { return {{"image_b64", req.image_b64}, {"prompt", req.prompt}}; }

Json to_json(const ModelInfo& info) {
  return {{"model_id", info.model_id},
          {"num_layers", info.num_layers},
          {"hidden_dim", info.hidden_dim},
          {"supports_steering", info.supports_steering}};
}

Json to_json(const ActivationDump& dump) { return {{"layers", dump.layers}, {"token_position", dump.token_position}}; }

EstimateRequest parse_estimate_request(const Json& body) {
  EstimateRequest req;
  req.image_b64 = field<std::string>(body, "image_b64");
  req.prompt = field<std::string>(body, "prompt");
  req.max_tokens = field<int>(body, "max_tokens");
  req.temperature = field<double>(body, "temperature");
  if (body.contains("steering") && !body.at("steering").is_null()) {
    const Json& s = body.at("steering");
    req.steering = SteeringPayload{field<std::vector<float>>(s, "vector"), field<double>(s, "alpha")};
  }
  return req;
}

PromptRequest parse_prompt_request(const Json& body) {
  return {field<std::string>(body, "image_b64"), field<std::string>(body, "prompt")};
}

ModelInfo parse_model_info(const Json& body) {
  return {field<std::string>(body, "model_id"), field<int>(body, "num_layers"), field<int>(body, "hidden_dim"),
          field<bool>(body, "supports_steering")};
}

ActivationDump parse_activations(const Json& body) {
  return {field<std::vector<std::vector<double>>>(body, "layers"), field<int>(body, "token_position")};
}

std::string parse_text_response(const Json& body) { return field<std::string>(body, "text"); }

}  // namespace sprobe::gateway
