#include "sprobe/taskvector/taskvector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "sprobe/error.hpp"
#include "sprobe/image_io.hpp"
#include "sprobe/numeric.hpp"

namespace sprobe::tv {

std::span<const double> TaskVector::layer(int index) const {
  if (index < 0 || index >= layer_count_used) throw Error(ErrorCode::OutOfRange, "layer index");
  return std::span<const double>(values).subspan(static_cast<std::size_t>(index * per_layer_dim),
                                                 static_cast<std::size_t>(per_layer_dim));
}

void check_compatible(const TaskVector& a, const TaskVector& b) {
  if (a.model_id != b.model_id || a.layer_count_used != b.layer_count_used ||
      a.per_layer_dim != b.per_layer_dim || a.values.size() != b.values.size()) {
    throw Error(ErrorCode::DimensionMismatch, "task vectors differ in model or shape");
  }
}

TaskVector build_task_vector(const gateway::ActivationDump& dump, const gateway::ModelInfo& info,
                             std::string source_id) {
  const int expected = info.layers_used();
  if (static_cast<int>(dump.layers.size()) != expected) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(expected) + " layers, got " +
                                                  std::to_string(dump.layers.size()));
  }
  TaskVector t;
  t.model_id = info.model_id;
  t.layer_count_used = expected;
  t.per_layer_dim = info.hidden_dim;
  t.source_id = std::move(source_id);
  t.values.reserve(static_cast<std::size_t>(expected) * static_cast<std::size_t>(info.hidden_dim));
  for (const auto& layer : dump.layers) {
    if (static_cast<int>(layer.size()) != info.hidden_dim) {
      throw Error(ErrorCode::DimensionMismatch, "layer width differs from hidden_dim");
    }
    for (double v : layer) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteActivation, "activation is not finite");
      t.values.push_back(v);
    }
  }
  return t;
}

TaskVector mean_task_vector(std::span<const TaskVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyInput, "no task vectors");
  for (const auto& v : vectors) check_compatible(vectors.front(), v);
  TaskVector out = vectors.front();
  out.source_id = "mean";
  const double n = static_cast<double>(vectors.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    KahanSum sum;
    for (const auto& v : vectors) sum.add(v.values[i]);
    out.values[i] = sum.value() / n;
  }
  return out;
}

double distance(const TaskVector& a, const TaskVector& b) {
  check_compatible(a, b);
  KahanSum sum;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sum.add(d * d);
  }
  return std::sqrt(sum.value());
}

double delta_k(const TaskVector& t, const TaskVector& t_k, const TaskVector& t_nk) {
  return distance(t, t_nk) - distance(t, t_k);
}

TaskVectorDistribution::TaskVectorDistribution(std::vector<TaskVector> samples)
    : samples_(std::move(samples)), centroid_(mean_task_vector(samples_)) {}

double two_sided_tail(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  KahanSum s;
  for (double x : xs) s.add(x);
  const double mean = s.value() / static_cast<double>(xs.size());
  KahanSum q;
  for (double x : xs) q.add((x - mean) * (x - mean));
  return {mean, std::sqrt(q.value() / static_cast<double>(xs.size() - 1))};
}

}  // namespace

MembershipModel::MembershipModel(const TaskVectorDistribution& dist_k, const TaskVectorDistribution& dist_nk,
                                 TailModel tail)
    : tail_(tail), t_k_(dist_k.centroid()), t_nk_(dist_nk.centroid()) {
  if (dist_k.size() < kMinMembershipSamples || dist_nk.size() < kMinMembershipSamples) {
    throw Error(ErrorCode::InsufficientSamples, "membership needs at least 10 samples per distribution");
  }
  check_compatible(t_k_, t_nk_);
  for (const auto& s : dist_k.samples()) proj_k_.push_back(project(s));
  for (const auto& s : dist_nk.samples()) proj_nk_.push_back(project(s));
  std::sort(proj_k_.begin(), proj_k_.end());
  std::sort(proj_nk_.begin(), proj_nk_.end());
  std::tie(mean_k_, sd_k_) = mean_sd(proj_k_);
  std::tie(mean_nk_, sd_nk_) = mean_sd(proj_nk_);
  if (!(sd_k_ > 0.0) || !(sd_nk_ > 0.0)) {
    throw Error(ErrorCode::DegenerateDistribution, "zero variance along the anchor axis");
  }
}

double MembershipModel::tail(double x, const std::vector<double>& sorted, double mean, double sd) const {
  if (tail_ == TailModel::gaussian) return two_sided_tail((x - mean) / sd);
  // Mid-rank empirical CDF, folded to two sides.
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
  const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
  const double cdf = (static_cast<double>(lo) + 0.5 * static_cast<double>(hi - lo)) / static_cast<double>(sorted.size());
  return std::min(1.0, 2.0 * std::min(cdf, 1.0 - cdf));
}

double MembershipModel::p_known(const TaskVector& t) const { return tail(project(t), proj_k_, mean_k_, sd_k_); }

double MembershipModel::p_unknown(const TaskVector& t) const {
  return tail(project(t), proj_nk_, mean_nk_, sd_nk_);
}

bool MembershipModel::is_member(const TaskVector& t) const {
  return p_unknown(t) < kMembershipThreshold && p_known(t) > kMembershipThreshold;
}

bool shortcut_membership(const TaskVector& t, const TaskVectorDistribution& dist_k,
                         const TaskVectorDistribution& dist_nk, TailModel tail) {
  return MembershipModel(dist_k, dist_nk, tail).is_member(t);
}

double shortcut_ratio(std::span<const TaskVector> dataset_vectors, const TaskVectorDistribution& dist_k,
                      const TaskVectorDistribution& dist_nk, TailModel tail) {
  if (dataset_vectors.empty()) throw Error(ErrorCode::EmptyInput, "no dataset vectors");
  const MembershipModel model(dist_k, dist_nk, tail);
  std::size_t members = 0;
  for (const auto& t : dataset_vectors) members += model.is_member(t) ? 1 : 0;
  return static_cast<double>(members) / static_cast<double>(dataset_vectors.size());
}

std::vector<double> SteeringVector::applied_delta() const {
  std::vector<double> out(direction.size());
  for (std::size_t i = 0; i < direction.size(); ++i) out[i] = alpha * direction[i];
  return out;
}

gateway::SteeringPayload SteeringVector::payload() const {
  gateway::SteeringPayload p;
  p.vector.assign(direction.begin(), direction.end());
  p.alpha = alpha;
  return p;
}

SteeringVector steering_vector(const TaskVector& t_k, const TaskVector& t_nk, double alpha) {
  check_compatible(t_k, t_nk);
  if (!std::isfinite(alpha)) throw Error(ErrorCode::ConfigError, "alpha must be finite");
  SteeringVector s;
  s.model_id = t_k.model_id;
  s.layer_count_used = t_k.layer_count_used;
  s.per_layer_dim = t_k.per_layer_dim;
  s.alpha = alpha;
  s.direction.resize(t_k.values.size());
  for (std::size_t i = 0; i < s.direction.size(); ++i) s.direction[i] = t_nk.values[i] - t_k.values[i];
  s.provenance = {{"t_k", t_k.source_id}, {"t_nk", t_nk.source_id}};
  return s;
}

// --- persistence ------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'P', 'T', 'V'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::ProtocolError, "truncated task-vector container");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json read_json(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, "bad metadata " + path.string() + ": " + e.what());
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

std::vector<std::uint8_t> encode_container(std::span<const TaskVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyInput, "no task vectors to encode");
  for (const auto& v : vectors) check_compatible(vectors.front(), v);
  const TaskVector& head = vectors.front();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kContainerVersion);
  put_u32(out, static_cast<std::uint32_t>(head.model_id.size()));
  out.insert(out.end(), head.model_id.begin(), head.model_id.end());
  put_u32(out, static_cast<std::uint32_t>(head.layer_count_used));
  put_u32(out, static_cast<std::uint32_t>(head.per_layer_dim));
  put_u32(out, static_cast<std::uint32_t>(vectors.size()));
  for (const auto& v : vectors) {
    for (double x : v.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  }
  return out;
}

std::vector<TaskVector> decode_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) throw Error(ErrorCode::ProtocolError, "not a task-vector container");
  if (r.u32() != kContainerVersion) throw Error(ErrorCode::ProtocolError, "unsupported container version");
  const std::string model_id = r.str(r.u32());
  const auto layers = r.u32();
  const auto dim = r.u32();
  const auto count = r.u32();
  std::vector<TaskVector> out(count);
  for (auto& v : out) {
    v.model_id = model_id;
    v.layer_count_used = static_cast<int>(layers);
    v.per_layer_dim = static_cast<int>(dim);
    v.values.resize(static_cast<std::size_t>(layers) * dim);
    for (double& x : v.values) x = r.f32();
  }
  if (!r.done()) throw Error(ErrorCode::ProtocolError, "trailing bytes in task-vector container");
  return out;
}

void save_task_vectors(const std::filesystem::path& path, std::span<const TaskVector> vectors,
                       const nlohmann::json& metadata) {
  io::write_file(path, encode_container(vectors));
  nlohmann::ordered_json meta;
  meta["kind"] = "task_vectors";
  meta["model_id"] = vectors.front().model_id;
  std::vector<std::string> ids;
  for (const auto& v : vectors) ids.push_back(v.source_id);
  meta["source_ids"] = ids;
  meta["metadata"] = metadata;
  const std::string text = meta.dump(2) + "\n";
  io::write_file(sidecar_path(path), std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<TaskVector> load_task_vectors(const std::filesystem::path& path) {
  auto vectors = decode_container(io::read_file(path));
  if (std::filesystem::exists(sidecar_path(path))) {
    const auto meta = read_json(sidecar_path(path));
    const auto ids = meta.value("source_ids", std::vector<std::string>{});
    for (std::size_t i = 0; i < vectors.size() && i < ids.size(); ++i) vectors[i].source_id = ids[i];
  }
  return vectors;
}

void save_steering_vector(const std::filesystem::path& path, const SteeringVector& s) {
  TaskVector carrier{s.model_id, s.layer_count_used, s.per_layer_dim, s.direction, "steering"};
  io::write_file(path, encode_container(std::span<const TaskVector>(&carrier, 1)));
  nlohmann::ordered_json meta;
  meta["kind"] = "steering";
  meta["model_id"] = s.model_id;
  meta["alpha"] = s.alpha;
  meta["provenance"] = s.provenance;
  const std::string text = meta.dump(2) + "\n";
  io::write_file(sidecar_path(path), std::vector<std::uint8_t>(text.begin(), text.end()));
}

SteeringVector load_steering_vector(const std::filesystem::path& path) {
  const auto vectors = decode_container(io::read_file(path));
  if (vectors.size() != 1) throw Error(ErrorCode::ProtocolError, "steering container must hold one vector");
  SteeringVector s;
  s.model_id = vectors[0].model_id;
  s.layer_count_used = vectors[0].layer_count_used;
  s.per_layer_dim = vectors[0].per_layer_dim;
  s.direction = vectors[0].values;
  const auto meta = read_json(sidecar_path(path));
  s.alpha = meta.value("alpha", 3.0);
  s.provenance = meta.value("provenance", nlohmann::json::object());
  return s;
}

}  // namespace sprobe::tv
