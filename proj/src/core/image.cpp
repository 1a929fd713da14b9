#include "sprobe/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "sprobe/error.hpp"
#include "sprobe/numeric.hpp"

namespace sprobe {

namespace {

void check_dims(int width, int height) {
  if (width < Image::kMinSide || height < Image::kMinSide) {
    throw Error(ErrorCode::InvalidImage, "image must be at least 8x8, got " +
                                             std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

Image::Image(int width, int height, float fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(pixel_count() * kChannels, fill);
}

Image::Image(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != pixel_count() * kChannels) {
    throw Error(ErrorCode::InvalidImage, "pixel buffer size does not match 3 x width x height");
  }
}

void Image::clip() noexcept {
  for (float& v : data_) {
    v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
  }
}

bool bit_identical(const Image& a, const Image& b) noexcept {
  return a.width() == b.width() && a.height() == b.height() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

double mean_intensity(const Image& image) noexcept {
  KahanSum sum;
  for (float v : image.data()) sum.add(v);
  return sum.value() / static_cast<double>(image.size());
}

}  // namespace sprobe
