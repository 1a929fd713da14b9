#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sprobe/gateway/estimator.hpp"

namespace sprobe::gateway {

struct ContractCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ContractReport {
  std::vector<ContractCheck> checks;
  bool passed() const;
};

// Black-box wire-protocol conformance checks run through a Transport. The
// same suite applies to the in-process mock, the mock HTTP server and any
// model service: shape coherence between model_info and activations,
// determinism at temperature 0, 400 on malformed requests, and the steering
// identities (alpha 0 and zero direction leave output unchanged, wrong
// dimension is rejected, 409 when steering is unsupported).
ContractReport run_contract_suite(Transport& transport);

}  // namespace sprobe::gateway
