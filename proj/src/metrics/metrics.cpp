#include "sprobe/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "sprobe/error.hpp"
#include "sprobe/numeric.hpp"

namespace sprobe::metrics {

namespace {

constexpr int kMaxPrediction = 120;

nlohmann::ordered_json mean_sem_json(const MeanSem& m) {
  return nlohmann::ordered_json{{"mean", m.mean}, {"sem", m.sem}, {"n", m.n}};
}

void check_prediction(int value, const std::string& id) {
  if (value < 0 || value > kMaxPrediction) {
    throw Error(ErrorCode::OutOfRange, "prediction " + std::to_string(value) + " for '" + id + "'");
  }
}

// Linear-interpolated quantile on sorted data (type 7).
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

MeanSem mean_sem(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values");
  KahanSum sum;
  for (double v : values) sum.add(v);
  const double n = static_cast<double>(values.size());
  const double mean = sum.value() / n;
  if (values.size() == 1) return {mean, 0.0, 1};
  KahanSum sq;
  for (double v : values) sq.add((v - mean) * (v - mean));
  const double var = sq.value() / (n - 1.0);
  return {mean, std::sqrt(var / n), values.size()};
}

MeanSem mean_abs_disagreement(const PairedPredictions& pairs) {
  if (pairs.entries.empty()) throw Error(ErrorCode::EmptyInput, "no paired predictions");
  std::vector<double> diffs;
  diffs.reserve(pairs.entries.size());
  for (const auto& e : pairs.entries) diffs.push_back(std::abs(static_cast<double>(e.f_pred - e.g_pred)));
  return mean_sem(diffs);
}

MeanSem mae(std::span<const std::pair<int, int>> predictions) {
  if (predictions.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
  std::vector<double> diffs;
  diffs.reserve(predictions.size());
  for (const auto& [pred, label] : predictions) diffs.push_back(std::abs(static_cast<double>(pred - label)));
  return mean_sem(diffs);
}

ShortcutReport shortcut_impact(const MeanSem& on_known, const MeanSem& on_unknown,
                               std::size_t parse_failure_count) {
  ShortcutReport r;
  r.delta_plus_E = on_known;
  r.E = on_unknown;
  r.delta_k = on_known.mean - on_unknown.mean;
  r.significant = std::fabs(r.delta_k) > on_known.sem + on_unknown.sem;
  r.n_known = on_known.n;
  r.n_unknown = on_unknown.n;
  r.parse_failure_count = parse_failure_count;
  return r;
}

nlohmann::ordered_json ShortcutReport::to_json() const {
  return nlohmann::ordered_json{{"delta_plus_E", mean_sem_json(delta_plus_E)},
                                {"E", mean_sem_json(E)},
                                {"delta_k", delta_k},
                                {"significant", significant},
                                {"n_known", n_known},
                                {"n_unknown", n_unknown},
                                {"parse_failure_count", parse_failure_count}};
}

// --- robustness -------------------------------------------------------------

RobustnessReport robustness_profile(std::span<const DeviationRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no deviation records");
  std::map<std::string, double> normalizers;
  for (const auto& r : records) {
    check_prediction(r.base_pred, r.id);
    check_prediction(r.corrupted_pred, r.id);
    const double dev = std::abs(static_cast<double>(r.base_pred - r.corrupted_pred));
    auto [it, inserted] = normalizers.emplace(r.corruption, dev);
    if (!inserted) it->second = std::max(it->second, dev);
  }
  return robustness_profile(records, normalizers);
}

RobustnessReport robustness_profile(std::span<const DeviationRecord> records,
                                    const std::map<std::string, double>& normalizers) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no deviation records");
  RobustnessReport report;
  std::set<std::string> dropped;
  // dataset -> corruption -> normalized deviations
  std::map<std::string, std::map<std::string, std::vector<double>>> grouped;
  std::map<std::string, std::size_t> record_counts;
  for (const auto& r : records) {
    check_prediction(r.base_pred, r.id);
    check_prediction(r.corrupted_pred, r.id);
    const auto it = normalizers.find(r.corruption);
    if (it == normalizers.end() || !(it->second > 0.0)) {
      dropped.insert(r.corruption);
      continue;
    }
    const double dev = std::abs(static_cast<double>(r.base_pred - r.corrupted_pred));
    grouped[r.dataset][r.corruption].push_back(std::min(1.0, dev / it->second));
    ++record_counts[r.dataset];
  }
  for (const auto& [name, value] : normalizers) {
    if (value > 0.0) report.normalizers[name] = value;
  }
  report.zero_normalizer.assign(dropped.begin(), dropped.end());
  for (const auto& [dataset, by_corruption] : grouped) {
    std::vector<double> corruption_means;
    for (const auto& [corruption, values] : by_corruption) {
      const double m = mean_sem(values).mean;
      report.per_corruption[dataset][corruption] = m;
      corruption_means.push_back(m);
    }
    const MeanSem ms = mean_sem(corruption_means);
    report.per_dataset[dataset] = {ms.mean, ms.sem, corruption_means.size(), record_counts[dataset]};
  }
  return report;
}

nlohmann::ordered_json RobustnessReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json datasets = nlohmann::ordered_json::object();
  for (const auto& [name, d] : per_dataset) {
    datasets[name] = {{"mean_normalized_deviation", d.mean_normalized_deviation},
                      {"sem_over_corruptions", d.sem_over_corruptions},
                      {"corruptions", d.corruptions},
                      {"records", d.records}};
  }
  j["per_dataset"] = datasets;
  j["normalizers"] = nlohmann::ordered_json(normalizers);
  j["zero_normalizer"] = zero_normalizer;
  nlohmann::ordered_json pc = nlohmann::ordered_json::object();
  for (const auto& [dataset, m] : per_corruption) pc[dataset] = nlohmann::ordered_json(m);
  j["per_corruption"] = pc;
  return j;
}

// --- error density ----------------------------------------------------------

double silverman_bandwidth(std::span<const double> values) {
  const MeanSem ms = mean_sem(values);
  const double n = static_cast<double>(values.size());
  const double sd = ms.sem * std::sqrt(n);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

DensityCurve error_density(std::span<const double> errors, double bandwidth) {
  std::set<double> distinct;
  for (double e : errors) {
    if (!std::isfinite(e)) throw Error(ErrorCode::DegenerateInput, "non-finite error value");
    distinct.insert(e);
    if (distinct.size() >= 2) break;
  }
  if (distinct.size() < 2) throw Error(ErrorCode::DegenerateInput, "need at least 2 distinct values");

  DensityCurve curve;
  curve.bandwidth = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(errors);
  const auto [mn, mx] = std::minmax_element(errors.begin(), errors.end());
  const double lo = std::min(0.0, *mn);
  const double hi = *mx > lo ? *mx : lo + 1.0;
  const double step = (hi - lo) / static_cast<double>(kDensityGridPoints - 1);
  const double h = curve.bandwidth;
  const double norm = 1.0 / (static_cast<double>(errors.size()) * h * std::sqrt(2.0 * M_PI));

  curve.grid.resize(kDensityGridPoints);
  curve.values.resize(kDensityGridPoints);
  for (std::size_t i = 0; i < kDensityGridPoints; ++i) {
    const double x = i + 1 == kDensityGridPoints ? hi : lo + step * static_cast<double>(i);
    KahanSum acc;
    for (double e : errors) {
      const double z = (x - e) / h;
      acc.add(std::exp(-0.5 * z * z));
    }
    curve.grid[i] = x;
    curve.values[i] = acc.value() * norm;
  }
  KahanSum area;
  for (std::size_t i = 1; i < kDensityGridPoints; ++i) {
    area.add(0.5 * (curve.values[i] + curve.values[i - 1]) * (curve.grid[i] - curve.grid[i - 1]));
  }
  const double total = area.value();
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateInput, "density vanished on grid");
  for (double& v : curve.values) v /= total;
  return curve;
}

std::string DensityCurve::to_csv() const {
  std::string out = "grid,value\n";
  char line[64];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", grid[i], values[i]);
    out += line;
  }
  return out;
}

nlohmann::ordered_json DensityCurve::to_json() const {
  return nlohmann::ordered_json{{"bandwidth", bandwidth}, {"grid", grid}, {"values", values}};
}

int bimodality_score(const DensityCurve& curve) {
  const auto& v = curve.values;
  if (v.empty()) return 0;
  const double peak = *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0)) return 0;
  const double floor = kBimodalityFloor * peak;
  int count = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;  // plateau [i, j]
    const bool left_ok = i == 0 || v[i - 1] < v[i];
    const bool right_ok = j + 1 == v.size() || v[j + 1] < v[i];
    if (left_ok && right_ok && v[i] > floor && v.size() > 1) ++count;
    i = j + 1;
  }
  return count;
}

}  // namespace sprobe::metrics
