#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sprobe/gateway/protocol.hpp"

namespace sprobe::tv {

// Layer-major concatenation of last-token hidden states for layers 1..floor(L/2).
struct TaskVector {
  std::string model_id;
  int layer_count_used = 0;
  int per_layer_dim = 0;
  std::vector<double> values;
  std::string source_id;

  std::size_t dim() const noexcept { return values.size(); }
  std::span<const double> layer(int index) const;
};

// Throws DimensionMismatch unless both vectors share model_id and shape.
void check_compatible(const TaskVector& a, const TaskVector& b);

// Throws DimensionMismatch, NonFiniteActivation.
TaskVector build_task_vector(const gateway::ActivationDump& dump, const gateway::ModelInfo& info,
                             std::string source_id = {});

// Element-wise mean. Throws EmptyInput, DimensionMismatch.
TaskVector mean_task_vector(std::span<const TaskVector> vectors);

double distance(const TaskVector& a, const TaskVector& b);

// ||t - t_nk|| - ||t - t_k||. Throws DimensionMismatch.
double delta_k(const TaskVector& t, const TaskVector& t_k, const TaskVector& t_nk);

// Immutable sample set with its centroid computed once.
class TaskVectorDistribution {
 public:
  // Throws EmptyInput, DimensionMismatch.
  explicit TaskVectorDistribution(std::vector<TaskVector> samples);

  const std::vector<TaskVector>& samples() const noexcept { return samples_; }
  const TaskVector& centroid() const noexcept { return centroid_; }
  std::size_t size() const noexcept { return samples_.size(); }

 private:
  std::vector<TaskVector> samples_;
  TaskVector centroid_;
};

inline constexpr std::size_t kMinMembershipSamples = 10;
inline constexpr double kMembershipThreshold = 0.1;

enum class TailModel { gaussian, empirical };

// Both distributions projected onto delta_k with anchors at their centroids.
class MembershipModel {
 public:
  // Throws InsufficientSamples (< 10 per side), DegenerateDistribution (zero projected variance).
  MembershipModel(const TaskVectorDistribution& dist_k, const TaskVectorDistribution& dist_nk,
                  TailModel tail = TailModel::gaussian);

  double project(const TaskVector& t) const { return delta_k(t, t_k_, t_nk_); }
  // Two-sided tail probability of t's projection under each side.
  double p_known(const TaskVector& t) const;
  double p_unknown(const TaskVector& t) const;
  // p_unknown < 0.1 && p_known > 0.1
  bool is_member(const TaskVector& t) const;

  const TaskVector& t_k() const noexcept { return t_k_; }
  const TaskVector& t_nk() const noexcept { return t_nk_; }
  const std::vector<double>& projected_known() const noexcept { return proj_k_; }
  const std::vector<double>& projected_unknown() const noexcept { return proj_nk_; }

 private:
  double tail(double x, const std::vector<double>& sorted, double mean, double sd) const;

  TailModel tail_;
  TaskVector t_k_, t_nk_;
  std::vector<double> proj_k_, proj_nk_;  // sorted
  double mean_k_ = 0, sd_k_ = 0, mean_nk_ = 0, sd_nk_ = 0;
};

// 2 * (1 - Phi(|z|)).
double two_sided_tail(double z);

bool shortcut_membership(const TaskVector& t, const TaskVectorDistribution& dist_k,
                         const TaskVectorDistribution& dist_nk, TailModel tail = TailModel::gaussian);

// Fraction of members. Throws EmptyInput plus membership errors.
double shortcut_ratio(std::span<const TaskVector> dataset_vectors, const TaskVectorDistribution& dist_k,
                      const TaskVectorDistribution& dist_nk, TailModel tail = TailModel::gaussian);

struct SteeringVector {
  std::string model_id;
  int layer_count_used = 0;
  int per_layer_dim = 0;
  std::vector<double> direction;  // t_nk - t_k
  double alpha = 3.0;
  nlohmann::json provenance = nlohmann::json::object();

  std::vector<double> applied_delta() const;
  gateway::SteeringPayload payload() const;
};

// Throws DimensionMismatch, ConfigError for non-finite alpha.
SteeringVector steering_vector(const TaskVector& t_k, const TaskVector& t_nk, double alpha = 3.0);

// --- persistence ------------------------------------------------------------
// Binary: "SPTV", u32 version, u32 id length, id bytes, u32 layer_count_used,
// u32 per_layer_dim, u32 count, then count * dim float32, all little-endian.
// Metadata goes to "<path>.json".

inline constexpr std::uint32_t kContainerVersion = 1;

std::vector<std::uint8_t> encode_container(std::span<const TaskVector> vectors);
// Throws ProtocolError on malformed bytes.
std::vector<TaskVector> decode_container(std::span<const std::uint8_t> bytes);

void save_task_vectors(const std::filesystem::path& path, std::span<const TaskVector> vectors,
                       const nlohmann::json& metadata = nlohmann::json::object());
std::vector<TaskVector> load_task_vectors(const std::filesystem::path& path);

void save_steering_vector(const std::filesystem::path& path, const SteeringVector& steering);
SteeringVector load_steering_vector(const std::filesystem::path& path);

}  // namespace sprobe::tv
