#include "sprobe/dataset/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "sprobe/csv.hpp"
#include "sprobe/error.hpp"
#include "sprobe/gateway/text.hpp"
#include "sprobe/image_io.hpp"
#include "sprobe/rng.hpp"

namespace sprobe::dataset {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::size_t gender_slot(Gender g) {
  if (g == Gender::unknown) throw Error(ErrorCode::OutOfRange, "demographics only track male/female");
  return g == Gender::male ? 0 : 1;
}

}  // namespace

std::string_view gender_name(Gender g) {
  switch (g) {
    case Gender::male: return "male";
    case Gender::female: return "female";
    case Gender::unknown: return "unknown";
  }
  return "unknown";
}

Gender parse_gender(std::string_view text) {
  const std::string g = lower(text);
  if (g == "male" || g == "m") return Gender::male;
  if (g == "female" || g == "f") return Gender::female;
  if (g == "unknown" || g == "u") return Gender::unknown;
  throw Error(ErrorCode::InvalidManifest, "unrecognized gender '" + std::string(text) + "'");
}

Manifest::Manifest(std::vector<Record> records, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
  std::set<std::string_view> seen;
  for (const Record& r : records_) {
    if (r.id.empty()) throw Error(ErrorCode::InvalidManifest, "record with empty id");
    if (!seen.insert(r.id).second) throw Error(ErrorCode::InvalidManifest, "duplicate id '" + r.id + "'");
    if (r.age && (*r.age < 0 || *r.age > gateway::kMaxAge)) {
      throw Error(ErrorCode::InvalidManifest, "age out of [0,120] for '" + r.id + "'");
    }
  }
}

const Record* Manifest::find(std::string_view id) const {
  const auto it = std::find_if(records_.begin(), records_.end(), [&](const Record& r) { return r.id == id; });
  return it == records_.end() ? nullptr : &*it;
}

std::filesystem::path Manifest::resolve(const Record& record) const {
  const std::filesystem::path p(record.path);
  return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
}

Manifest Manifest::filter_known(bool known) const {
  std::vector<Record> out;
  for (const Record& r : records_) {
    if (r.known == known) out.push_back(r);
  }
  return Manifest(std::move(out), base_dir_);
}

nlohmann::json record_to_json(const Record& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["path"] = r.path;
  j["age"] = r.age ? nlohmann::json(*r.age) : nlohmann::json(nullptr);
  j["gender"] = r.gender ? nlohmann::json(gender_name(*r.gender)) : nlohmann::json(nullptr);
  j["identity"] = r.identity ? nlohmann::json(*r.identity) : nlohmann::json(nullptr);
  j["source"] = r.source;
  j["known"] = r.known ? nlohmann::json(*r.known) : nlohmann::json(nullptr);
  return j;
}

Record record_from_json(const nlohmann::json& j) {
  try {
    Record r;
    r.id = j.at("id").get<std::string>();
    r.path = j.value("path", std::string{});
    if (j.contains("age") && !j["age"].is_null()) r.age = j["age"].get<int>();
    if (j.contains("gender") && !j["gender"].is_null()) r.gender = parse_gender(j["gender"].get<std::string>());
    if (j.contains("identity") && !j["identity"].is_null()) r.identity = j["identity"].get<std::string>();
    r.source = j.value("source", std::string{});
    if (j.contains("known") && !j["known"].is_null()) r.known = j["known"].get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, std::string("bad record: ") + e.what());
  }
}

std::string to_jsonl(const Manifest& manifest) {
  std::string out = nlohmann::json{{"schema", kManifestSchema}, {"version", kManifestVersion}}.dump();
  out.push_back('\n');
  for (const Record& r : manifest.records()) {
    out += record_to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

Manifest from_jsonl(std::string_view text, std::filesystem::path base_dir) {
  std::vector<Record> records;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidManifest, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!header_seen) {
      if (!j.is_object() || j.value("schema", "") != kManifestSchema) {
        throw Error(ErrorCode::InvalidManifest, "missing manifest header line");
      }
      if (j.value("version", 0) != kManifestVersion) {
        throw Error(ErrorCode::InvalidManifest, "unsupported manifest version");
      }
      header_seen = true;
      continue;
    }
    records.push_back(record_from_json(j));
  }
  if (!header_seen) throw Error(ErrorCode::InvalidManifest, "empty manifest file");
  return Manifest(std::move(records), std::move(base_dir));
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_jsonl(buffer.str(), path.parent_path());
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  // Relative record paths are re-expressed against the destination directory.
  namespace fs = std::filesystem;
  const fs::path dest_dir = fs::weakly_canonical(fs::absolute(path).parent_path());
  const fs::path base_dir =
      manifest.base_dir().empty() ? dest_dir : fs::weakly_canonical(fs::absolute(manifest.base_dir()));
  std::string text;
  if (base_dir == dest_dir) {
    text = to_jsonl(manifest);
  } else {
    std::vector<Record> records = manifest.records();
    for (auto& r : records) {
      if (fs::path(r.path).is_absolute()) continue;
      r.path = fs::weakly_canonical(base_dir / r.path).lexically_relative(dest_dir).generic_string();
    }
    text = to_jsonl(Manifest(std::move(records)));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest " + path.string());
  out << text;
}

Manifest build_manifest(const std::filesystem::path& images_dir,
                        const std::optional<std::filesystem::path>& labels_csv, std::string_view source) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(images_dir)) {
    if (entry.is_regular_file() && io::is_image_path(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, std::vector<std::string>> labels;
  int col_age = -1, col_gender = -1, col_identity = -1;
  if (labels_csv) {
    const csv::Table table = csv::read(*labels_csv);
    const int col_file = table.column("file");
    if (col_file < 0) throw Error(ErrorCode::InvalidManifest, "labels CSV needs a 'file' column");
    col_age = table.column("age");
    col_gender = table.column("gender");
    col_identity = table.column("identity");
    for (const auto& row : table.rows) {
      if (static_cast<int>(row.size()) > col_file) labels[row[static_cast<std::size_t>(col_file)]] = row;
    }
  }
  const auto cell = [](const std::vector<std::string>& row, int col) -> std::string {
    return col >= 0 && static_cast<std::size_t>(col) < row.size() ? row[static_cast<std::size_t>(col)] : "";
  };

  std::vector<Record> records;
  for (const auto& file : files) {
    Record r;
    r.id = file.stem().string();
    r.path = std::filesystem::relative(file, images_dir).string();
    r.source = std::string(source);
    if (labels_csv) {
      const auto it = labels.find(file.filename().string());
      if (it == labels.end()) continue;
      if (const auto age = cell(it->second, col_age); !age.empty()) r.age = std::stoi(age);
      if (const auto g = cell(it->second, col_gender); !g.empty()) r.gender = parse_gender(g);
      if (const auto name = cell(it->second, col_identity); !name.empty()) r.identity = name;
    }
    records.push_back(std::move(r));
  }
  return Manifest(std::move(records), images_dir);
}

// --- demographics -----------------------------------------------------------

int assign_age_bin(int age) {
  for (std::size_t i = 0; i < kAgeBins.size(); ++i) {
    if (age >= kAgeBins[i].lo && age <= kAgeBins[i].hi) return static_cast<int>(i);
  }
  throw Error(ErrorCode::OutOfRange, "age " + std::to_string(age) + " outside the binned range [0,100]");
}

std::string_view age_bin_label(int bin) { return kAgeBins.at(static_cast<std::size_t>(bin)).label; }

int parse_age_bin(std::string_view label) {
  for (std::size_t i = 0; i < kAgeBins.size(); ++i) {
    if (kAgeBins[i].label == label) return static_cast<int>(i);
  }
  throw Error(ErrorCode::InvalidManifest, "unknown age bin '" + std::string(label) + "'");
}

std::uint64_t& Demographics::at(Gender g, int bin) {
  return counts[gender_slot(g)].at(static_cast<std::size_t>(bin));
}

std::uint64_t Demographics::at(Gender g, int bin) const {
  return counts[gender_slot(g)].at(static_cast<std::size_t>(bin));
}

std::uint64_t Demographics::total() const {
  std::uint64_t sum = 0;
  for (const auto& row : counts) {
    for (auto v : row) sum += v;
  }
  return sum;
}

bool Demographics::within(const Demographics& bound) const {
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t b = 0; b < 8; ++b) {
      if (counts[g][b] > bound.counts[g][b]) return false;
    }
  }
  return true;
}

nlohmann::ordered_json Demographics::to_json() const {
  nlohmann::ordered_json j;
  for (Gender g : {Gender::male, Gender::female}) {
    nlohmann::ordered_json row;
    for (int b = 0; b < 8; ++b) row[std::string(age_bin_label(b))] = at(g, b);
    j[std::string(gender_name(g))] = row;
  }
  return j;
}

Demographics Demographics::from_json(const nlohmann::json& j) {
  Demographics d;
  try {
    for (Gender g : {Gender::male, Gender::female}) {
      const auto& row = j.at(std::string(gender_name(g)));
      for (auto it = row.begin(); it != row.end(); ++it) {
        const auto value = it.value().get<std::int64_t>();
        if (value < 0) throw Error(ErrorCode::InvalidManifest, "negative demographic count");
        d.at(g, parse_age_bin(it.key())) = static_cast<std::uint64_t>(value);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, std::string("bad demographics JSON: ") + e.what());
  }
  return d;
}

Demographics measure_demographics(const Manifest& manifest) {
  Demographics d;
  for (const Record& r : manifest.records()) {
    if (!r.age || !r.gender) throw Error(ErrorCode::MissingLabel, "record '" + r.id + "' lacks age or gender");
    if (*r.gender == Gender::unknown) continue;
    ++d.at(*r.gender, assign_age_bin(*r.age));
  }
  return d;
}

Manifest subsample_to_target(const Manifest& manifest, const Demographics& target, std::uint64_t seed) {
  // cells[g][b] -> indices into manifest records
  std::array<std::array<std::vector<std::size_t>, 8>, 2> cells;
  std::vector<bool> keep(manifest.size(), false);
  const auto& records = manifest.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    if (!r.age || !r.gender) throw Error(ErrorCode::MissingLabel, "record '" + r.id + "' lacks age or gender");
    if (*r.gender == Gender::unknown) {
      keep[i] = true;
      continue;
    }
    cells[gender_slot(*r.gender)][static_cast<std::size_t>(assign_age_bin(*r.age))].push_back(i);
  }
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t b = 0; b < 8; ++b) {
      auto& cell = cells[g][b];
      std::sort(cell.begin(), cell.end(), [&](std::size_t a, std::size_t c) { return records[a].id < records[c].id; });
      const rng::CounterRng rng(seed, g * 8 + b);
      for (std::size_t i = cell.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(i - 1, 0, static_cast<std::int64_t>(i - 1)));
        std::swap(cell[i - 1], cell[j]);
      }
      const std::size_t take = std::min<std::size_t>(cell.size(), target.counts[g][b]);
      for (std::size_t k = 0; k < take; ++k) keep[cell[k]] = true;
    }
  }
  std::vector<Record> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(records[i]);
  }
  return Manifest(std::move(out), manifest.base_dir());
}

// --- known / unknown split --------------------------------------------------

Manifest split_known_unknown(const Manifest& manifest, const std::map<std::string, IdentityResult>& results) {
  std::vector<Record> out;
  out.reserve(manifest.size());
  for (const Record& r : manifest.records()) {
    const auto it = results.find(r.id);
    if (it == results.end()) throw Error(ErrorCode::IncompleteResults, "no identity result for '" + r.id + "'");
    const IdentityResult& res = it->second;
    Record copy = r;
    if (r.identity) {
      copy.known = res.name.has_value() && gateway::match_identity(*res.name, *r.identity);
    } else {
      copy.known = res.verified.value_or(false);
    }
    out.push_back(std::move(copy));
  }
  return Manifest(std::move(out), manifest.base_dir());
}

nlohmann::json results_to_json(const std::map<std::string, IdentityResult>& results) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, res] : results) {
    j[id] = {{"name", res.name ? nlohmann::json(*res.name) : nlohmann::json(nullptr)},
             {"verified", res.verified ? nlohmann::json(*res.verified) : nlohmann::json(nullptr)}};
  }
  return j;
}

std::map<std::string, IdentityResult> results_from_json(const nlohmann::json& j) {
  std::map<std::string, IdentityResult> out;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      IdentityResult res;
      const auto& v = it.value();
      if (v.contains("name") && !v["name"].is_null()) res.name = v["name"].get<std::string>();
      if (v.contains("verified") && !v["verified"].is_null()) res.verified = v["verified"].get<bool>();
      out.emplace(it.key(), std::move(res));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IncompleteResults, std::string("bad identity results: ") + e.what());
  }
  return out;
}

}  // namespace sprobe::dataset
