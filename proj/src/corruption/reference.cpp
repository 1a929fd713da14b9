#include "sprobe/corruption/reference.hpp"

#include <algorithm>
#include <cmath>

namespace sprobe::corruption::reference {

using kernels::reflect_index;

Raster correlate(const Raster& src, const Kernel2D& kernel) {
  Raster out(src.width, src.height, src.channels);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      for (int c = 0; c < src.channels; ++c) {
        double acc = 0.0;
        for (int dy = -kernel.radius_y; dy <= kernel.radius_y; ++dy) {
          for (int dx = -kernel.radius_x; dx <= kernel.radius_x; ++dx) {
            acc += kernel.at(dx, dy) *
                   src.at(reflect_index(x + dx, src.width), reflect_index(y + dy, src.height), c);
          }
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Raster gaussian_blur(const Raster& src, double sigma, double truncate) {
  const auto taps = kernels::gaussian_weights(sigma, truncate);
  const int r = static_cast<int>(taps.size() / 2);
  Kernel2D k;
  k.radius_x = r;
  k.radius_y = r;
  k.weights.resize(taps.size() * taps.size());
  for (std::size_t j = 0; j < taps.size(); ++j) {
    for (std::size_t i = 0; i < taps.size(); ++i) k.weights[j * taps.size() + i] = taps[j] * taps[i];
  }
  return correlate(src, k);
}

Raster zoom_center(const Raster& src, double factor) {
  Raster out(src.width, src.height, src.channels);
  const double cx = (src.width - 1) / 2.0;
  const double cy = (src.height - 1) / 2.0;
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const double sx = cx + (x - cx) / factor;
      const double sy = cy + (y - cy) / factor;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double ax = sx - x0;
      const double ay = sy - y0;
      for (int c = 0; c < src.channels; ++c) {
        const double v00 = src.at(reflect_index(x0, src.width), reflect_index(y0, src.height), c);
        const double v10 = src.at(reflect_index(x0 + 1, src.width), reflect_index(y0, src.height), c);
        const double v01 = src.at(reflect_index(x0, src.width), reflect_index(y0 + 1, src.height), c);
        const double v11 = src.at(reflect_index(x0 + 1, src.width), reflect_index(y0 + 1, src.height), c);
        out.at(x, y, c) = static_cast<float>(v00 * (1 - ax) * (1 - ay) + v10 * ax * (1 - ay) +
                                             v01 * (1 - ax) * ay + v11 * ax * ay);
      }
    }
  }
  return out;
}

Raster resize_nearest(const Raster& src, int width, int height) {
  Raster out(width, height, src.channels);
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * src.height / height;
    const int sy = std::min(src.height - 1, static_cast<int>(std::floor(fy)));
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * src.width / width;
      const int sx = std::min(src.width - 1, static_cast<int>(std::floor(fx)));
      for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = src.at(sx, sy, c);
    }
  }
  return out;
}

}  // namespace sprobe::corruption::reference
