#pragma once
// Synthetic task-vector clusters and an independent membership oracle.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sprobe/taskvector/taskvector.hpp"

namespace sprobe::testing {

inline tv::TaskVector make_tv(std::vector<double> values, int layers = 1, std::string id = {}) {
  tv::TaskVector t;
  t.model_id = "synthetic";
  t.layer_count_used = layers;
  t.per_layer_dim = static_cast<int>(values.size()) / layers;
  t.values = std::move(values);
  t.source_id = std::move(id);
  return t;
}

// Two clusters in `dim` dimensions along the first axis, centers `gap * sigma` apart.
// Orthogonal noise is small so the distance-difference projection stays close to linear.
struct Clusters {
  std::vector<tv::TaskVector> known, unknown;
};

inline tv::TaskVector cluster_point(std::mt19937_64& gen, double center, int dim, double sigma, double sigma_perp) {
  std::normal_distribution<double> axis(center, sigma), perp(0.0, sigma_perp);
  std::vector<double> v(static_cast<std::size_t>(dim));
  v[0] = axis(gen);
  for (int i = 1; i < dim; ++i) v[static_cast<std::size_t>(i)] = perp(gen);
  return make_tv(std::move(v), 2);
}

inline Clusters make_clusters(std::uint64_t seed, std::size_t n, double gap, int dim = 8, double sigma = 1.0,
                              double sigma_perp = 0.05) {
  std::mt19937_64 gen(seed);
  Clusters c;
  for (std::size_t i = 0; i < n; ++i) c.known.push_back(cluster_point(gen, +gap * sigma / 2, dim, sigma, sigma_perp));
  for (std::size_t i = 0; i < n; ++i) c.unknown.push_back(cluster_point(gen, -gap * sigma / 2, dim, sigma, sigma_perp));
  return c;
}

// Brute-force reference: plain loops, no shared code with the library.
struct OracleMembership {
  std::vector<double> tk, tnk;
  double mk = 0, sk = 0, mnk = 0, snk = 0;

  static std::vector<double> mean(const std::vector<tv::TaskVector>& vs) {
    std::vector<double> m(vs[0].values.size(), 0.0);
    for (const auto& v : vs)
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += v.values[i];
    for (double& x : m) x /= static_cast<double>(vs.size());
    return m;
  }
  static double norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  }
  double project(const tv::TaskVector& t) const { return norm_diff(t.values, tnk) - norm_diff(t.values, tk); }
  void fit(const std::vector<tv::TaskVector>& vs, double& m, double& s) const {
    double sum = 0;
    for (const auto& v : vs) sum += project(v);
    m = sum / static_cast<double>(vs.size());
    double ss = 0;
    for (const auto& v : vs) ss += (project(v) - m) * (project(v) - m);
    s = std::sqrt(ss / static_cast<double>(vs.size() - 1));
  }
  OracleMembership(const std::vector<tv::TaskVector>& known, const std::vector<tv::TaskVector>& unknown)
      : tk(mean(known)), tnk(mean(unknown)) {
    fit(known, mk, sk);
    fit(unknown, mnk, snk);
  }
  double p_known(const tv::TaskVector& t) const { return std::erfc(std::abs((project(t) - mk) / sk) / std::sqrt(2.0)); }
  double p_unknown(const tv::TaskVector& t) const {
    return std::erfc(std::abs((project(t) - mnk) / snk) / std::sqrt(2.0));
  }
  bool member(const tv::TaskVector& t) const { return p_unknown(t) < 0.1 && p_known(t) > 0.1; }
};

}  // namespace sprobe::testing
