#include "sprobe/orchestrator/cache.hpp"

#include <sodium.h>

#include <bit>
#include <fstream>

#include "sprobe/error.hpp"

namespace sprobe::orchestrator {

std::string blake2b_hex(std::span<const std::uint8_t> data) {
  unsigned char digest[32];
  crypto_generichash(digest, sizeof digest, data.data(), data.size(), nullptr, 0);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 15]);
  }
  return out;
}

std::string blake2b_hex(std::string_view data) {
  return blake2b_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string steering_fingerprint(const gateway::SteeringPayload* steering) {
  if (!steering) return "none";
  std::string bytes;
  const auto alpha_bits = std::bit_cast<std::uint64_t>(steering->alpha);
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>(alpha_bits >> (8 * i)));
  for (float f : steering->vector) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>(bits >> (8 * i)));
  }
  return blake2b_hex(bytes);
}

std::string cache_key(const CacheKeyParts& p) {
  // Length-prefixed fields keep the encoding injective.
  std::string buf;
  for (const std::string* field : {&p.estimator, &p.image, &p.corruption, &p.steering, &p.request}) {
    buf += std::to_string(field->size());
    buf.push_back(':');
    buf += *field;
  }
  return blake2b_hex(buf);
}

RunCache::RunCache(const std::filesystem::path& dir) : log_path_(dir / "cache.log") {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create cache dir " + dir.string());

  std::uintmax_t good_bytes = 0;
  if (std::filesystem::exists(log_path_)) {
    std::ifstream in(log_path_, std::ios::binary);
    std::string line;
    std::uintmax_t offset = 0;
    while (std::getline(in, line)) {
      const bool complete = !in.eof();
      offset += line.size() + (complete ? 1 : 0);
      if (!complete) {
        ++dropped_;
        break;
      }
      try {
        auto j = nlohmann::json::parse(line);
        index_[j.at("k").get<std::string>()] = std::move(j.at("v"));
        good_bytes = offset;
      } catch (const nlohmann::json::exception&) {
        // A torn line can only be the last one; anything after it is dropped too.
        ++dropped_;
        break;
      }
    }
    if (good_bytes != std::filesystem::file_size(log_path_)) std::filesystem::resize_file(log_path_, good_bytes);
  }
  out_ = std::fopen(log_path_.c_str(), "ab");
  if (!out_) throw Error(ErrorCode::IoError, "cannot open cache log " + log_path_.string());
}

RunCache::~RunCache() {
  if (out_) std::fclose(out_);
}

std::optional<nlohmann::json> RunCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void RunCache::put(const std::string& key, const nlohmann::json& value) {
  const std::string line = nlohmann::json{{"k", key}, {"v", value}}.dump() + "\n";
  std::lock_guard lock(mutex_);
  if (std::fwrite(line.data(), 1, line.size(), out_) != line.size() || std::fflush(out_) != 0) {
    throw Error(ErrorCode::IoError, "cache append failed");
  }
  index_[key] = value;
}

std::size_t RunCache::size() const {
  std::lock_guard lock(mutex_);
  return index_.size();
}

}  // namespace sprobe::orchestrator
