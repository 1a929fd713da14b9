#include "sprobe/corruption/catalog.hpp"

#include <cmath>
#include <stdexcept>

#include "sprobe/error.hpp"

namespace sprobe::corruption {

namespace {

constexpr std::array<std::string_view, kKindCount> kNames = {
    "gaussian_noise", "shot_noise", "impulse_noise", "speckle_noise", "defocus_blur",
    "glass_blur",     "motion_blur", "zoom_blur",    "gaussian_blur", "snow",
    "frost",          "fog",         "spatter",      "brightness",    "contrast",
    "saturate",       "elastic",     "pixelate",     "jpeg",
};

using Row = std::vector<double>;
using Table = std::array<Row, 4>;

struct KindTable {
  std::vector<std::string> names;  // empty: zoom factors, named z1..zN
  Table rows;
};

// Hyperparameter table, one row per severity 0.25 / 0.5 / 0.75 / 0.99.
const KindTable& table_for(Kind kind) {
  static const std::array<KindTable, kKindCount> tables = {{
      {{"sigma"}, {{{0.13}, {0.22}, {0.31}, {0.40}}}},
      {{"c"}, {{{17.25}, {31.50}, {45.75}, {59.43}}}},
      {{"c"}, {{{0.09}, {0.15}, {0.21}, {0.27}}}},
      {{"c"}, {{{0.26}, {0.38}, {0.49}, {0.60}}}},
      {{"radius", "alias_blur"}, {{{4.75, 0.20}, {6.50, 0.30}, {8.25, 0.40}, {9.93, 0.50}}}},
      {{"sigma", "max_delta", "iterations"},
       {{{0.90, 1, 2}, {1.10, 2, 2}, {1.30, 3, 2}, {1.49, 3, 2}}}},
      {{"radius", "sigma"}, {{{12.50, 6.00}, {15.00, 9.00}, {17.50, 12.00}, {19.90, 14.88}}}},
      {{},
       {{{1.00, 1.01, 1.03, 1.04, 1.06, 1.07, 1.09, 1.10},
         {1.00, 1.02, 1.04, 1.06, 1.08, 1.10, 1.12, 1.14, 1.16},
         {1.00, 1.02, 1.05, 1.07, 1.10, 1.12, 1.15, 1.17, 1.20},
         {1.00, 1.03, 1.06, 1.09, 1.12, 1.15, 1.18, 1.21, 1.24}}}},
      {{"sigma"}, {{{2.25}, {3.50}, {4.75}, {5.95}}}},
      {{"c1", "c2", "c3", "c4", "c5", "c6", "c7"},
       {{{0.21, 0.30, 3.38, 0.59, 10.50, 5.00, 0.94},
         {0.33, 0.30, 3.75, 0.68, 11.00, 6.00, 1.08},
         {0.44, 0.30, 4.12, 0.76, 11.50, 7.00, 1.21},
         {0.55, 0.30, 4.48, 0.85, 11.98, 7.96, 1.34}}}},
      {{"c1", "c2"}, {{{0.90, 0.49}, {0.80, 0.57}, {0.70, 0.66}, {0.60, 0.75}}}},
      {{"c1", "c2"}, {{{1.88, 1.85}, {2.25, 1.70}, {2.62, 1.55}, {2.98, 1.41}}}},
      {{"c1", "c2", "c3", "c4", "c5", "c6"},
       {{{0.66, 0.33, 1.75, 0.68, 0.82, 0.00},
         {0.66, 0.35, 2.50, 0.67, 1.05, 0.00},
         {0.67, 0.38, 3.25, 0.67, 1.27, 0.00},
         {0.67, 0.40, 3.97, 0.66, 1.49, 0.00}}}},
      {{"c"}, {{{0.20}, {0.30}, {0.40}, {0.50}}}},
      {{"c"}, {{{0.31}, {0.23}, {0.14}, {0.05}}}},
      {{"c1", "c2"}, {{{5.22, 0.05}, {10.15, 0.10}, {15.07, 0.15}, {19.80, 0.20}}}},
      {{"c1", "c2", "c3"}, {{{0.80, 4.80, 2.16}, {1.60, 3.20, 1.76}, {2.40, 1.60, 1.36}, {3.17, 0.06, 0.98}}}},
      {{"c"}, {{{0.46}, {0.33}, {0.19}, {0.06}}}},
      {{"quality"}, {{{20}, {16}, {12}, {7}}}},
  }};
  return tables.at(static_cast<std::size_t>(kind));
}

}  // namespace

std::string_view kind_name(Kind kind) {
  const auto i = static_cast<std::size_t>(kind);
  if (i >= kNames.size()) throw Error(ErrorCode::UnknownKind, "kind index " + std::to_string(i));
  return kNames[i];
}

Kind parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Kind>(i);
  }
  throw Error(ErrorCode::UnknownKind, "unknown corruption kind '" + std::string(name) + "'");
}

double severity_value(Severity severity) { return kSeverityLevels.at(static_cast<std::size_t>(severity)); }

Severity parse_severity(double value) {
  for (std::size_t i = 0; i < kSeverityLevels.size(); ++i) {
    if (std::fabs(value - kSeverityLevels[i]) < 1e-9) return kSeverities[i];
  }
  throw Error(ErrorCode::UnsupportedSeverity,
              "severity " + std::to_string(value) + " is not one of 0.25, 0.5, 0.75, 0.99");
}

bool is_stochastic(Kind kind) {
  switch (kind) {
    case Kind::defocus_blur:
    case Kind::zoom_blur:
    case Kind::gaussian_blur:
    case Kind::brightness:
    case Kind::contrast:
    case Kind::saturate:
    case Kind::pixelate:
    case Kind::jpeg:
      return false;
    default:
      return true;
  }
}

std::string spec_label(Kind kind, Severity severity) {
  static constexpr std::array<std::string_view, 4> kLabels = {"0.25", "0.5", "0.75", "0.99"};
  return std::string(kind_name(kind)) + "@" + std::string(kLabels.at(static_cast<std::size_t>(severity)));
}

double ParamVector::get(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw std::out_of_range("no parameter named " + std::string(name));
}

std::optional<double> ParamVector::find(std::string_view name) const {
  for (const auto& [key, value] : entries_) {
    if (key == name) return value;
  }
  return std::nullopt;
}

nlohmann::ordered_json ParamVector::to_json() const {
  auto out = nlohmann::ordered_json::array();
  for (const auto& [key, value] : entries_) out.push_back({{"name", key}, {"value", value}});
  return out;
}

ParamVector resolve_params(Kind kind, Severity severity) {
  const auto& table = table_for(kind);
  const auto& row = table.rows.at(static_cast<std::size_t>(severity));
  std::vector<std::pair<std::string, double>> entries;
  entries.reserve(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    std::string name = table.names.empty() ? "z" + std::to_string(i + 1) : table.names.at(i);
    entries.emplace_back(std::move(name), row[i]);
  }
  return ParamVector(std::move(entries));
}

ParamVector resolve_params(std::string_view kind, double severity) {
  const Kind k = parse_kind(kind);
  return resolve_params(k, parse_severity(severity));
}

std::vector<CatalogEntry> corruption_catalog() {
  std::vector<CatalogEntry> out;
  out.reserve(kKindCount);
  for (int i = 0; i < kKindCount; ++i) {
    out.push_back({static_cast<Kind>(i), kNames[static_cast<std::size_t>(i)], kSeverityLevels});
  }
  return out;
}

}  // namespace sprobe::corruption
