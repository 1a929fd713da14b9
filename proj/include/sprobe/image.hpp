#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sprobe {

// RGB raster with interleaved float intensities in [0,1], row-major.
class Image {
 public:
  static constexpr int kChannels = 3;
  static constexpr int kMinSide = 8;

  Image(int width, int height, float fill = 0.0f);
  Image(int width, int height, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(int x, int y, int c) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  float at(int x, int y, int c) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  // Clamps every intensity into [0,1]; NaN maps to 0.
  void clip() noexcept;

 private:
  int width_;
  int height_;
  std::vector<float> data_;
};

// Bitwise equality of dimensions and every stored float.
bool bit_identical(const Image& a, const Image& b) noexcept;

// Mean over all intensities, compensated summation.
double mean_intensity(const Image& image) noexcept;

}  // namespace sprobe
