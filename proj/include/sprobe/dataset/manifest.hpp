#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sprobe::dataset {

enum class Gender { male, female, unknown };

std::string_view gender_name(Gender g);
// Accepts male/female/unknown and m/f/u, case-insensitive. Throws InvalidManifest.
Gender parse_gender(std::string_view text);

struct Record {
  std::string id;
  std::string path;  // relative paths resolve against the manifest directory
  std::optional<int> age;
  std::optional<Gender> gender;
  std::optional<std::string> identity;
  std::string source;
  std::optional<bool> known;

  bool operator==(const Record&) const = default;
};

inline constexpr std::string_view kManifestSchema = "sprobe.manifest";
inline constexpr int kManifestVersion = 1;

// Ordered records with unique ids and ages in [0,120] where present.
class Manifest {
 public:
  Manifest() = default;
  // Throws InvalidManifest on duplicate ids or out-of-range ages.
  explicit Manifest(std::vector<Record> records, std::filesystem::path base_dir = {});

  const std::vector<Record>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  const Record* find(std::string_view id) const;
  std::filesystem::path resolve(const Record& record) const;

  // Records whose known flag equals the argument.
  Manifest filter_known(bool known) const;

 private:
  std::vector<Record> records_;
  std::filesystem::path base_dir_;
};

// JSON Lines: header {"schema":"sprobe.manifest","version":1}, then one record per line.
std::string to_jsonl(const Manifest& manifest);
Manifest from_jsonl(std::string_view text, std::filesystem::path base_dir = {});
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

nlohmann::json record_to_json(const Record& record);
Record record_from_json(const nlohmann::json& j);

// Scans images_dir (PNG/JPEG, sorted by file name). When labels_csv is given
// (columns: file, age, gender, identity; age/gender/identity may be empty)
// only labelled files are included. Ids are file stems.
Manifest build_manifest(const std::filesystem::path& images_dir,
                        const std::optional<std::filesystem::path>& labels_csv, std::string_view source);

// --- demographics -----------------------------------------------------------

struct AgeBin {
  int lo;
  int hi;
  std::string_view label;
};

inline constexpr std::array<AgeBin, 8> kAgeBins = {{{0, 2, "0-2"},
                                                    {3, 6, "3-6"},
                                                    {7, 12, "7-12"},
                                                    {13, 20, "13-20"},
                                                    {21, 32, "21-32"},
                                                    {33, 43, "33-43"},
                                                    {44, 53, "44-53"},
                                                    {54, 100, "54-100"}}};

// Index into kAgeBins. Throws OutOfRange outside [0,100].
int assign_age_bin(int age);
std::string_view age_bin_label(int bin);
int parse_age_bin(std::string_view label);

// Counts per (binary gender, age bin).
struct Demographics {
  std::array<std::array<std::uint64_t, 8>, 2> counts{};

  std::uint64_t& at(Gender g, int bin);
  std::uint64_t at(Gender g, int bin) const;
  std::uint64_t total() const;
  // Cell-wise <=.
  bool within(const Demographics& bound) const;
  bool operator==(const Demographics&) const = default;

  nlohmann::ordered_json to_json() const;
  static Demographics from_json(const nlohmann::json& j);
};

// Records of gender "unknown" are skipped. Throws MissingLabel when a record
// lacks age or gender, OutOfRange for ages above 100.
Demographics measure_demographics(const Manifest& manifest);

// Per cell, draws min(target, available) records uniformly without
// replacement: the cell's records sorted by id are Fisher-Yates shuffled with
// the counter RNG keyed by (seed, gender, bin) and the prefix is kept. Records
// of unknown gender pass through unchanged. Output keeps input order.
Manifest subsample_to_target(const Manifest& manifest, const Demographics& target, std::uint64_t seed);

// --- known / unknown split --------------------------------------------------

struct IdentityResult {
  std::optional<std::string> name;  // nullopt: model answered Unknown
  std::optional<bool> verified;     // cross-check outcome (no ground truth)
};

// known = (identity label present && name matches it) ||
//         (no identity label && verified == true).
// Throws IncompleteResults if any manifest id lacks a result.
Manifest split_known_unknown(const Manifest& manifest, const std::map<std::string, IdentityResult>& results);

nlohmann::json results_to_json(const std::map<std::string, IdentityResult>& results);
std::map<std::string, IdentityResult> results_from_json(const nlohmann::json& j);

}  // namespace sprobe::dataset
