#pragma once
// Demographic reference counts (male row, female row) per age bin.

#include <array>
#include <cstdint>
#include <string>

#include "sprobe/dataset/manifest.hpp"

namespace sprobe::testing {

using CountTable = std::array<std::array<std::uint64_t, 8>, 2>;

inline constexpr CountTable kVideoScrapeCounts = {{{0, 1, 5, 1, 25, 55, 38, 41}, {0, 3, 4, 1, 15, 18, 5, 3}}};
inline constexpr CountTable kAgeDbCounts = {{{0, 1, 5, 1, 25, 55, 38, 41}, {0, 3, 4, 1, 15, 18, 5, 3}}};
inline constexpr CountTable kFgNetCounts = {{{0, 1, 5, 1, 25, 38, 19, 10}, {0, 3, 4, 1, 15, 18, 5, 3}}};

// Synthetic manifest with counts[g][b] records per cell; ages cycle through the bin.
inline dataset::Manifest manifest_from_counts(const CountTable& counts, const std::string& prefix) {
  std::vector<dataset::Record> records;
  for (int g = 0; g < 2; ++g) {
    for (int b = 0; b < 8; ++b) {
      const auto& bin = dataset::kAgeBins[static_cast<std::size_t>(b)];
      for (std::uint64_t i = 0; i < counts[g][b]; ++i) {
        dataset::Record r;
        r.id = prefix + "_" + std::to_string(g) + "_" + std::to_string(b) + "_" + std::to_string(i);
        r.path = r.id + ".png";
        r.age = bin.lo + static_cast<int>(i % static_cast<std::uint64_t>(bin.hi - bin.lo + 1));
        r.gender = g == 0 ? dataset::Gender::male : dataset::Gender::female;
        r.source = prefix;
        records.push_back(std::move(r));
      }
    }
  }
  return dataset::Manifest(std::move(records));
}

inline dataset::Demographics demographics_of(const CountTable& counts) {
  dataset::Demographics d;
  d.counts = counts;
  return d;
}

}  // namespace sprobe::testing
