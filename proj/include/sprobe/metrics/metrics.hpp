#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace sprobe::metrics {

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;  // sample std / sqrt(n); 0 when n == 1
  std::size_t n = 0;
};

// Kahan-compensated two-moment summary. Throws EmptyInput.
MeanSem mean_sem(std::span<const double> values);

enum class SubsetTag { known, unknown, all };

struct PairedEntry {
  std::string id;
  int f_pred;
  int g_pred;
};

struct PairedPredictions {
  std::vector<PairedEntry> entries;
  SubsetTag subset = SubsetTag::all;
  std::size_t parse_failures = 0;  // dropped upstream, reported only
};

// mean |f - g| over entries. Throws EmptyInput.
MeanSem mean_abs_disagreement(const PairedPredictions& pairs);

// (pred, label) pairs; mean |pred - label|. Throws EmptyInput.
MeanSem mae(std::span<const std::pair<int, int>> predictions);

struct ShortcutReport {
  MeanSem delta_plus_E;  // disagreement on known identities
  MeanSem E;             // disagreement on unknown identities
  double delta_k = 0.0;
  bool significant = false;
  std::size_t n_known = 0;
  std::size_t n_unknown = 0;
  std::size_t parse_failure_count = 0;

  nlohmann::ordered_json to_json() const;
};

// delta_k = known.mean - unknown.mean; significant iff |delta_k| > known.sem + unknown.sem.
ShortcutReport shortcut_impact(const MeanSem& on_known, const MeanSem& on_unknown,
                               std::size_t parse_failure_count = 0);

// --- robustness -------------------------------------------------------------

struct DeviationRecord {
  std::string corruption;  // "kind@severity"
  std::string id;
  std::string dataset;
  int base_pred;
  int corrupted_pred;
};

struct DatasetRobustness {
  double mean_normalized_deviation = 0.0;
  double sem_over_corruptions = 0.0;
  std::size_t corruptions = 0;
  std::size_t records = 0;
};

struct RobustnessReport {
  std::map<std::string, DatasetRobustness> per_dataset;
  std::map<std::string, double> normalizers;  // corruption -> global max deviation
  std::vector<std::string> zero_normalizer;   // corruptions dropped (no prediction moved)
  // dataset -> corruption -> mean normalized deviation
  std::map<std::string, std::map<std::string, double>> per_corruption;

  nlohmann::ordered_json to_json() const;
};

// Normalizer per corruption is the max |base - corrupted| over all datasets.
// A dataset's mean is the mean over corruptions of the per-corruption mean
// normalized deviation; the sem is taken across those corruption means.
// Throws EmptyInput, OutOfRange for predictions outside [0,120].
RobustnessReport robustness_profile(std::span<const DeviationRecord> records);

// Same, with normalizers supplied (e.g. from an earlier full run). Corruptions
// missing from `normalizers` or with a zero entry are dropped with a diagnostic.
RobustnessReport robustness_profile(std::span<const DeviationRecord> records,
                                    const std::map<std::string, double>& normalizers);

// --- error density ----------------------------------------------------------

inline constexpr std::size_t kDensityGridPoints = 256;

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> values;
  double bandwidth = 0.0;

  std::string to_csv() const;
  nlohmann::ordered_json to_json() const;
};

// 0.9 * min(std, IQR/1.34) * n^(-1/5); falls back to std when the IQR is 0.
double silverman_bandwidth(std::span<const double> values);

// Gaussian KDE on 256 points spanning [min(0, min x), max x], rescaled so the
// trapezoid integral is 1. Throws DegenerateInput for fewer than 2 distinct values.
DensityCurve error_density(std::span<const double> errors, double bandwidth = 0.0);

inline constexpr double kBimodalityFloor = 0.05;

// Local maxima (plateaus count once, endpoints included) above 5% of the peak.
int bimodality_score(const DensityCurve& curve);

}  // namespace sprobe::metrics
