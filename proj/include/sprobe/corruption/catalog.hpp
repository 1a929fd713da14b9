#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace sprobe::corruption {

// Ordered as in the hyperparameter table; the enumerator value is the kind
// index used to key the RNG stream.
enum class Kind : int {
  gaussian_noise,
  shot_noise,
  impulse_noise,
  speckle_noise,
  defocus_blur,
  glass_blur,
  motion_blur,
  zoom_blur,
  gaussian_blur,
  snow,
  frost,
  fog,
  spatter,
  brightness,
  contrast,
  saturate,
  elastic,
  pixelate,
  jpeg,
};

inline constexpr int kKindCount = 19;

enum class Severity : int { s025, s050, s075, s099 };

inline constexpr std::array<double, 4> kSeverityLevels = {0.25, 0.5, 0.75, 0.99};
inline constexpr std::array<Severity, 4> kSeverities = {Severity::s025, Severity::s050,
                                                        Severity::s075, Severity::s099};

std::string_view kind_name(Kind kind);
// Throws UnknownKind.
Kind parse_kind(std::string_view name);
double severity_value(Severity severity);
// Throws UnsupportedSeverity unless value is one of the four levels.
Severity parse_severity(double value);

// Kinds that draw from the RNG; the rest are deterministic transforms.
bool is_stochastic(Kind kind);

struct CorruptionSpec {
  Kind kind;
  Severity severity;
  std::uint64_t seed = 0;

  bool operator==(const CorruptionSpec&) const = default;
};

// Canonical "kind@severity" label, e.g. "gaussian_noise@0.25".
std::string spec_label(Kind kind, Severity severity);

class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::vector<std::pair<std::string, double>> entries)
      : entries_(std::move(entries)) {}

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }
  double operator[](std::size_t i) const { return entries_.at(i).second; }
  // Throws std::out_of_range for unknown names.
  double get(std::string_view name) const;
  std::optional<double> find(std::string_view name) const;

  // Ordered list of {"name": ..., "value": ...}.
  nlohmann::ordered_json to_json() const;

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

ParamVector resolve_params(Kind kind, Severity severity);
// Validating overload for untyped callers (CLI, config).
ParamVector resolve_params(std::string_view kind, double severity);

struct CatalogEntry {
  Kind kind;
  std::string_view name;
  std::array<double, 4> severities;
};

std::vector<CatalogEntry> corruption_catalog();

}  // namespace sprobe::corruption
