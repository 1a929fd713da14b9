#include "sprobe/gateway/contract.hpp"

#include <functional>

#include "sprobe/error.hpp"
#include "sprobe/gateway/text.hpp"

namespace sprobe::gateway {

namespace {

Image probe_image(int variant) {
  Image img(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      img.at(x, y, 0) = static_cast<float>(x) / 31.0f;
      img.at(x, y, 1) = static_cast<float>(y) / 31.0f;
      img.at(x, y, 2) = static_cast<float>((x + y + 7 * variant) % 32) / 31.0f;
    }
  }
  return img;
}

Json estimate_body(const Image& img, const std::optional<SteeringPayload>& steering = std::nullopt) {
  EstimateRequest req;
  req.image_b64 = encode_image_b64(img);
  req.prompt = std::string(kAgePrompt);
  req.steering = steering;
  return to_json(req);
}

Json prompt_body(const Image& img, std::string prompt) {
  return to_json(PromptRequest{encode_image_b64(img), std::move(prompt)});
}

// Runs fn expecting an Error with the given code.
std::string expect_error(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == code) return {};
    return std::string("wrong error: ") + e.what();
  }
  return "request succeeded";
}

}  // namespace

bool ContractReport::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return !checks.empty();
}

ContractReport run_contract_suite(Transport& t) {
  ContractReport report;
  const auto check = [&](std::string name, const std::function<std::string()>& body) {
    ContractCheck c{std::move(name), false, {}};
    try {
      c.detail = body();
      c.passed = c.detail.empty();
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    report.checks.push_back(std::move(c));
  };

  ModelInfo info;
  check("model_info fields", [&]() -> std::string {
    info = parse_model_info(t.get(kModelInfoPath));
    if (info.model_id.empty()) return "empty model_id";
    if (info.num_layers < 1 || info.hidden_dim < 1) return "non-positive num_layers or hidden_dim";
    return {};
  });
  if (!report.checks.back().passed) return report;

  const Image img = probe_image(0);
  std::string baseline;
  check("estimate returns text", [&]() -> std::string {
    baseline = parse_text_response(t.post(kEstimatePath, estimate_body(img)));
    return {};
  });
  check("estimate deterministic", [&]() -> std::string {
    const auto again = parse_text_response(t.post(kEstimatePath, estimate_body(img)));
    return again == baseline ? "" : "'" + again + "' != '" + baseline + "'";
  });
  check("identify returns text", [&]() -> std::string {
    parse_text_response(t.post(kIdentifyPath, prompt_body(img, std::string(kIdentifyPrompt))));
    return {};
  });

  ActivationDump first;
  check("activations shape matches model_info", [&]() -> std::string {
    first = parse_activations(t.post(kActivationsPath, prompt_body(img, std::string(kAgePrompt))));
    if (static_cast<int>(first.layers.size()) != info.layers_used()) {
      return "layers " + std::to_string(first.layers.size()) + " != floor(L/2) " + std::to_string(info.layers_used());
    }
    for (const auto& layer : first.layers) {
      if (static_cast<int>(layer.size()) != info.hidden_dim) return "layer width differs from hidden_dim";
    }
    if (first.token_position < 0) return "negative token_position";
    return {};
  });
  check("activations deterministic", [&]() -> std::string {
    const auto again = parse_activations(t.post(kActivationsPath, prompt_body(img, std::string(kAgePrompt))));
    return again.layers == first.layers ? "" : "activations differ between identical requests";
  });
  check("empty prompt rejected", [&] {
    return expect_error(ErrorCode::ProtocolError, [&] { t.post(kActivationsPath, prompt_body(img, "")); });
  });
  check("malformed image rejected", [&] {
    Json body = estimate_body(img);
    body["image_b64"] = "%%% not base64 %%%";
    return expect_error(ErrorCode::ProtocolError, [&] { t.post(kEstimatePath, body); });
  });
  check("missing field rejected", [&] {
    Json body = estimate_body(img);
    body.erase("prompt");
    return expect_error(ErrorCode::ProtocolError, [&] { t.post(kEstimatePath, body); });
  });

  const std::size_t dim = static_cast<std::size_t>(info.layers_used()) * static_cast<std::size_t>(info.hidden_dim);
  if (!info.supports_steering) {
    check("steering refused when unsupported", [&] {
      return expect_error(ErrorCode::SteeringUnsupported, [&] {
        t.post(kEstimatePath, estimate_body(img, SteeringPayload{std::vector<float>(dim, 1.0f), 3.0}));
      });
    });
    return report;
  }
  for (int variant = 0; variant < 3; ++variant) {
    const Image probe = probe_image(variant);
    check("alpha 0 is identity #" + std::to_string(variant), [&]() -> std::string {
      const auto plain = parse_text_response(t.post(kEstimatePath, estimate_body(probe)));
      const auto steered = parse_text_response(
          t.post(kEstimatePath, estimate_body(probe, SteeringPayload{std::vector<float>(dim, 5.0f), 0.0})));
      return plain == steered ? "" : "'" + steered + "' != '" + plain + "'";
    });
    check("zero direction is identity #" + std::to_string(variant), [&]() -> std::string {
      const auto plain = parse_text_response(t.post(kEstimatePath, estimate_body(probe)));
      const auto steered = parse_text_response(
          t.post(kEstimatePath, estimate_body(probe, SteeringPayload{std::vector<float>(dim, 0.0f), 3.0})));
      return plain == steered ? "" : "'" + steered + "' != '" + plain + "'";
    });
  }
  check("wrong steering dimension rejected", [&] {
    return expect_error(ErrorCode::ProtocolError, [&] {
      t.post(kEstimatePath, estimate_body(img, SteeringPayload{std::vector<float>(dim + 1, 1.0f), 3.0}));
    });
  });
  return report;
}

}  // namespace sprobe::gateway
