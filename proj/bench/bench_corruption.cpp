// Serial vs OpenMP timing for every corruption kind, plus the naive reference
// blur against the separable kernel.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sprobe/corruption/catalog.hpp"
#include "sprobe/corruption/corrupt.hpp"
#include "sprobe/corruption/kernels.hpp"
#include "sprobe/corruption/reference.hpp"
#include "sprobe/rng.hpp"

using namespace sprobe;
using namespace sprobe::corruption;

namespace {

Image noise(int size) {
  Image img(size, size);
  const rng::CounterRng r(1, 0);
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = static_cast<float>(r.uniform(i));
  return img;
}

template <typename F>
double median_ms(int reps, F&& fn) {
  std::vector<double> t;
  for (int i = 0; i < reps; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::nth_element(t.begin(), t.begin() + reps / 2, t.end());
  return t[static_cast<std::size_t>(reps / 2)];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corruption kernel benchmark"};
  int size = 256, reps = 3;
  double severity = 0.5;
  app.add_option("--size", size, "square image side")->check(CLI::Range(8, 4096));
  app.add_option("--reps", reps, "repetitions per measurement (median reported)")->check(CLI::Range(1, 100));
  app.add_option("--severity", severity, "severity level");
  CLI11_PARSE(app, argc, argv);

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  const Severity sev = parse_severity(severity);
  const Image src = noise(size);
  std::printf("image %dx%d, severity %.2f, %d OpenMP thread(s), median of %d\n", size, size, severity, threads, reps);
  std::printf("%-16s %12s %12s %8s %s\n", "kind", "serial_ms", "parallel_ms", "speedup", "identical");

  double total_serial = 0, total_parallel = 0;
  for (int k = 0; k < kKindCount; ++k) {
    const CorruptionSpec spec{static_cast<Kind>(k), sev, 7};
    Image a = src, b = src;
    const double ts = median_ms(reps, [&] { a = apply_corruption(src, spec, Exec::serial); });
    const double tp = median_ms(reps, [&] { b = apply_corruption(src, spec, Exec::parallel); });
    const bool same = std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
    std::printf("%-16s %12.2f %12.2f %8.2f %s\n", std::string(kind_name(spec.kind)).c_str(), ts, tp, ts / tp,
                same ? "yes" : "NO");
    total_serial += ts;
    total_parallel += tp;
  }
  std::printf("%-16s %12.2f %12.2f %8.2f\n", "total", total_serial, total_parallel, total_serial / total_parallel);

  const auto raster = kernels::from_image(src);
  const double sigma = 3.5;
  const double t_ref = median_ms(reps, [&] { (void)reference::gaussian_blur(raster, sigma); });
  const double t_sep = median_ms(reps, [&] { (void)kernels::gaussian_blur(raster, sigma, Exec::parallel); });
  std::printf("gaussian_blur sigma %.2f: naive reference %.2f ms, separable kernel %.2f ms (%.1fx)\n", sigma, t_ref,
              t_sep, t_ref / t_sep);
  return 0;
}
