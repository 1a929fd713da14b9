#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sprobe/dataset/manifest.hpp"
#include "sprobe/gateway/estimator.hpp"
#include "sprobe/metrics/metrics.hpp"
#include "sprobe/orchestrator/cache.hpp"
#include "sprobe/orchestrator/config.hpp"
#include "sprobe/taskvector/taskvector.hpp"

namespace sprobe::orchestrator {

// Builds the transport for an estimator; empty means gateway::make_transport.
using TransportFactory = std::function<std::shared_ptr<gateway::Transport>(const EstimatorConfig&)>;

struct FailureRecord {
  std::string estimator;
  std::string dataset;
  std::string id;
  std::string corruption;
  std::string request;
  std::string message;
};

struct RunStats {
  std::uint64_t queries = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t failures = 0;
};

struct ShortcutOutcome {
  std::string estimator_f;
  std::string estimator_g;
  std::string dataset;
  metrics::ShortcutReport report;
  std::filesystem::path file;
};

struct RobustnessOutcome {
  std::string estimator;
  metrics::RobustnessReport report;
  std::vector<metrics::DeviationRecord> records;
  std::size_t parse_failures = 0;
  std::filesystem::path file;
};

struct SteeringSample {
  std::string id;
  int label;
  int default_pred;
  int steered_pred;
};

struct SteeringDatasetResult {
  std::string dataset;
  metrics::MeanSem default_mae;
  metrics::MeanSem steered_mae;
  std::size_t parse_failures = 0;
  std::size_t unlabeled = 0;
  std::vector<SteeringSample> samples;
};

struct SteeringOutcome {
  std::string estimator;
  double alpha = 0.0;
  std::size_t n_known = 0;
  std::size_t n_unknown = 0;
  std::vector<double> projected_known;
  std::vector<double> projected_unknown;
  std::vector<SteeringDatasetResult> datasets;
  std::filesystem::path file;
};

// Drives experiments for one config. Every estimator request goes through
// the run cache, so a restarted run only issues the requests that never
// completed. Reports contain no timings and are written with stable key
// order, so equal inputs give byte-identical files.
class Runner {
 public:
  explicit Runner(ExperimentConfig config, TransportFactory factory = {});
  ~Runner();

  std::vector<ShortcutOutcome> run_shortcut();
  std::vector<RobustnessOutcome> run_robustness();
  std::vector<SteeringOutcome> run_steering();

  // only: "shortcut", "robustness", "steering" or nullopt for every
  // experiment the config supports. Writes plot data under output_dir/plots.
  void run(const std::optional<std::string>& only = std::nullopt);

  const ExperimentConfig& config() const noexcept { return config_; }
  const RunStats& stats() const noexcept { return stats_; }
  const std::vector<FailureRecord>& failures() const noexcept { return failures_; }
  // Requests that reached a transport (cache misses, retries included).
  std::uint64_t requests_sent() const;

  struct Query;

 private:
  struct Answer {
    bool ok = false;
    nlohmann::json value;
  };

  gateway::EstimatorClient& client(const EstimatorConfig& estimator);
  const dataset::Manifest& manifest(const DatasetConfig& dataset);
  std::vector<Answer> execute(const std::vector<Query>& queries);
  void write_failures() const;

  ExperimentConfig config_;
  TransportFactory factory_;
  std::unique_ptr<RunCache> cache_;
  std::map<std::string, std::unique_ptr<gateway::EstimatorClient>> clients_;
  std::map<std::string, dataset::Manifest> manifests_;
  std::vector<FailureRecord> failures_;
  RunStats stats_;
  std::vector<RobustnessOutcome> last_robustness_;
  std::vector<SteeringOutcome> last_steering_;
};

std::vector<ShortcutOutcome> run_shortcut_experiment(const ExperimentConfig& config, TransportFactory factory = {});
std::vector<RobustnessOutcome> run_robustness_experiment(const ExperimentConfig& config,
                                                         TransportFactory factory = {});
std::vector<SteeringOutcome> run_steering_experiment(const ExperimentConfig& config, TransportFactory factory = {});

// Plot-ready series. Every file is plain CSV with a header row; the bundle
// directory always receives manifest.json listing the files written.
struct PlotInputs {
  std::vector<std::pair<std::string, metrics::RobustnessReport>> robustness;
  std::vector<std::pair<std::string, metrics::DensityCurve>> densities;
  std::vector<std::pair<std::string, std::vector<double>>> delta_k;  // raw projections
};

std::vector<std::filesystem::path> emit_plot_data(const PlotInputs& inputs, const std::filesystem::path& dir);

// Derives the per-image corruption seed from the run seed and an image key.
std::uint64_t image_seed(std::uint64_t run_seed, std::string_view image_key);

// Pretty-printed, key-ordered JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace sprobe::orchestrator
