#pragma once
// Synthetic gray-image datasets and mock-backed runner configs.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sprobe/dataset/manifest.hpp"
#include "sprobe/gateway/mock.hpp"
#include "sprobe/image_io.hpp"
#include "sprobe/orchestrator/config.hpp"
#include "sprobe/orchestrator/experiments.hpp"
#include "support.hpp"

namespace sprobe::testing {

struct GraySpec {
  int level;  // 8-bit gray value
  std::optional<int> age;
  std::optional<bool> known;
  dataset::Gender gender = dataset::Gender::male;
};

// One 16x16 8-bit gray PNG per entry plus a manifest; returns the manifest path.
inline std::filesystem::path write_gray_dataset(const std::filesystem::path& dir, const std::string& name,
                                                const std::vector<GraySpec>& specs) {
  const auto root = dir / name;
  std::filesystem::create_directories(root);
  std::vector<dataset::Record> records;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    dataset::Record r;
    r.id = name + "_" + std::to_string(i);
    r.path = r.id + ".png";
    r.age = specs[i].age;
    r.gender = specs[i].gender;
    r.known = specs[i].known;
    r.source = name;
    io::write_png(constant_image(16, 16, static_cast<float>(specs[i].level / 255.0)), root / r.path, io::PngDepth::u8);
    records.push_back(std::move(r));
  }
  const auto path = root / "manifest.jsonl";
  dataset::write_manifest(dataset::Manifest(std::move(records)), path);
  return path;
}

// Gray levels whose clean and +51 brightened values avoid multiples of 85, where
// the mock's floor(99 * v) lands exactly on an integer.
inline std::vector<int> brightness_levels(std::size_t n) {
  std::vector<int> out;
  for (int g = 3; out.size() < n && g + 51 <= 255; g += 4) {
    if (g % 85 != 0 && (g + 51) % 85 != 0) out.push_back(g);
  }
  return out;
}

inline int mock_age_of_level(int level) { return 1 + (99 * level) / 255; }

inline orchestrator::EstimatorConfig estimator(const std::string& name, orchestrator::EstimatorRole role) {
  orchestrator::EstimatorConfig e;
  e.name = name;
  e.role = role;
  e.handle.model_id = name;
  e.handle.endpoint = "mock://" + name;
  e.handle.retry.initial_backoff = std::chrono::milliseconds(1);
  return e;
}

inline orchestrator::ExperimentConfig base_config(const std::filesystem::path& out) {
  orchestrator::ExperimentConfig c;
  c.output_dir = out;
  c.concurrency_limit = 2;
  c.corruption_seed = 7;
  return c;
}

// Every estimator name maps to its own in-process mock backend.
inline orchestrator::TransportFactory mock_factory(std::map<std::string, std::shared_ptr<gateway::MockBackend>> backends) {
  return [backends = std::move(backends)](const orchestrator::EstimatorConfig& e) -> std::shared_ptr<gateway::Transport> {
    return std::make_shared<gateway::InProcessTransport>(backends.at(e.name));
  };
}

}  // namespace sprobe::testing
