#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sprobe/image.hpp"
#include "sprobe/parallel.hpp"

// Data-parallel building blocks for the corruption pipelines. Every kernel
// takes an Exec policy; Exec::serial and Exec::parallel produce bit-identical
// results because each output element is computed by exactly one iteration
// in a fixed order. Naive serial counterparts live in reference.hpp.
namespace sprobe::corruption::kernels {

// Interleaved float raster with an arbitrary channel count.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  Raster() = default;
  Raster(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int x, int y, int c) noexcept { return data[index(x, y, c)]; }
  float at(int x, int y, int c) const noexcept { return data[index(x, y, c)]; }
};

Raster from_image(const Image& image);
// Clips into [0,1] and wraps as an Image (channels must be 3).
Image to_image(Raster raster);

// Half-sample symmetric boundary ("d c b a | a b c d"), any offset.
inline int reflect_index(int i, int n) noexcept {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Dense 2-D correlation kernel centred at (radius_x, radius_y).
struct Kernel2D {
  int radius_x = 0;
  int radius_y = 0;
  std::vector<double> weights;  // (2*radius_y+1) rows of (2*radius_x+1)

  int width() const noexcept { return 2 * radius_x + 1; }
  int height() const noexcept { return 2 * radius_y + 1; }
  double at(int dx, int dy) const noexcept {
    return weights[static_cast<std::size_t>(dy + radius_y) * width() + (dx + radius_x)];
  }
};

// Normalized 1-D Gaussian taps, radius = floor(truncate * sigma + 0.5).
std::vector<double> gaussian_weights(double sigma, double truncate = 4.0);

// Disk of the given radius convolved with a small Gaussian (alias blur).
Kernel2D disk_kernel(double radius, double alias_blur);

// One-sided line kernel along angle_deg with Gaussian falloff sigma.
Kernel2D motion_kernel(double radius, double sigma, double angle_deg);

Raster separable_filter(const Raster& src, std::span<const double> taps_x,
                        std::span<const double> taps_y, Exec exec);
Raster gaussian_blur(const Raster& src, double sigma, Exec exec, double truncate = 4.0);
Raster correlate(const Raster& src, const Kernel2D& kernel, Exec exec);
Raster box_blur(const Raster& src, int size, Exec exec);

// Bilinear sample at continuous coordinates with symmetric boundary.
float sample_bilinear(const Raster& src, double x, double y, int c) noexcept;

// Magnifies about the image centre by factor (>= 1), keeping the size.
Raster zoom_center(const Raster& src, double factor, Exec exec);

// Nearest-neighbour resample: source index floor((2*d + 1) * n_src / (2 * n_dst)).
Raster resize_nearest(const Raster& src, int width, int height, Exec exec);

}  // namespace sprobe::corruption::kernels
