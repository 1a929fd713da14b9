#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "sprobe/image.hpp"
#include "sprobe/rng.hpp"

namespace sprobe::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sprobe-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
             std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Smooth diagonal ramps per channel, values in [lo, hi].
inline Image gradient_image(int w, int h, float lo = 0.0f, float hi = 1.0f) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float u = static_cast<float>(x) / static_cast<float>(w - 1);
      const float v = static_cast<float>(y) / static_cast<float>(h - 1);
      img.at(x, y, 0) = lo + (hi - lo) * u;
      img.at(x, y, 1) = lo + (hi - lo) * v;
      img.at(x, y, 2) = lo + (hi - lo) * 0.5f * (u + v);
    }
  }
  return img;
}

inline Image constant_image(int w, int h, float value) {
  Image img(w, h);
  for (float& v : img.data()) v = value;
  return img;
}

// Uniform noise in [0,1).
inline Image noise_image(int w, int h, std::uint64_t seed) {
  Image img(w, h);
  const rng::CounterRng rng(seed, 99);
  std::uint64_t i = 0;
  for (float& v : img.data()) v = static_cast<float>(rng.uniform(i++));
  return img;
}

}  // namespace sprobe::testing
