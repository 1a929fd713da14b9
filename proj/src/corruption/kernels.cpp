#include "sprobe/corruption/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sprobe/error.hpp"

namespace sprobe::corruption::kernels {

Raster from_image(const Image& image) {
  Raster r;
  r.width = image.width();
  r.height = image.height();
  r.channels = Image::kChannels;
  r.data.assign(image.data().begin(), image.data().end());
  return r;
}

Image to_image(Raster raster) {
  Image out(raster.width, raster.height, std::move(raster.data));
  out.clip();
  return out;
}

std::vector<double> gaussian_weights(double sigma, double truncate) {
  if (!(sigma > 0.0)) return {1.0};
  const int radius = static_cast<int>(truncate * sigma + 0.5);
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

Kernel2D disk_kernel(double radius, double alias_blur) {
  const int disk_half = std::max(8, static_cast<int>(std::ceil(radius)));
  // 3x3 smoothing for small disks, 5x5 beyond radius 8.
  const int smooth_half = radius <= 8.0 ? 1 : 2;
  const int half = disk_half + smooth_half;
  const int size = 2 * half + 1;

  std::vector<double> disk(static_cast<std::size_t>(size) * size, 0.0);
  double disk_total = 0.0;
  for (int y = -disk_half; y <= disk_half; ++y) {
    for (int x = -disk_half; x <= disk_half; ++x) {
      if (x * x + y * y <= radius * radius) {
        disk[static_cast<std::size_t>(y + half) * size + (x + half)] = 1.0;
        disk_total += 1.0;
      }
    }
  }
  for (double& v : disk) v /= disk_total;

  std::vector<double> smooth(static_cast<std::size_t>(2 * smooth_half + 1));
  double smooth_total = 0.0;
  for (int i = -smooth_half; i <= smooth_half; ++i) {
    const double w = alias_blur > 0.0 ? std::exp(-0.5 * i * i / (alias_blur * alias_blur)) : (i == 0 ? 1.0 : 0.0);
    smooth[static_cast<std::size_t>(i + smooth_half)] = w;
    smooth_total += w;
  }
  for (double& w : smooth) w /= smooth_total;

  Kernel2D k;
  k.radius_x = half;
  k.radius_y = half;
  k.weights.assign(disk.size(), 0.0);
  double total = 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int j = -smooth_half; j <= smooth_half; ++j) {
        for (int i = -smooth_half; i <= smooth_half; ++i) {
          const int sx = x + i;
          const int sy = y + j;
          if (sx < 0 || sy < 0 || sx >= size || sy >= size) continue;
          acc += smooth[static_cast<std::size_t>(i + smooth_half)] *
                 smooth[static_cast<std::size_t>(j + smooth_half)] *
                 disk[static_cast<std::size_t>(sy) * size + sx];
        }
      }
      k.weights[static_cast<std::size_t>(y) * size + x] = acc;
      total += acc;
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

Kernel2D motion_kernel(double radius, double sigma, double angle_deg) {
  const int length = std::max(1, static_cast<int>(std::ceil(radius)));
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cx = std::cos(theta);
  const double cy = std::sin(theta);
  Kernel2D k;
  k.radius_x = length;
  k.radius_y = length;
  k.weights.assign(static_cast<std::size_t>(k.width()) * k.height(), 0.0);
  double total = 0.0;
  for (int t = 0; t <= length; ++t) {
    const double w = sigma > 0.0 ? std::exp(-0.5 * t * t / (sigma * sigma)) : (t == 0 ? 1.0 : 0.0);
    const int dx = static_cast<int>(std::lround(t * cx));
    const int dy = static_cast<int>(std::lround(t * cy));
    k.weights[static_cast<std::size_t>(dy + length) * k.width() + (dx + length)] += w;
    total += w;
  }
  for (double& w : k.weights) w /= total;
  return k;
}

Raster separable_filter(const Raster& src, std::span<const double> taps_x,
                        std::span<const double> taps_y, Exec exec) {
  const int rx = static_cast<int>(taps_x.size() / 2);
  const int ry = static_cast<int>(taps_y.size() / 2);
  const int w = src.width;
  const int h = src.height;
  const int ch = src.channels;

  Raster tmp(w, h, ch);
  parallel_for(exec, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -rx; i <= rx; ++i) {
          acc += taps_x[static_cast<std::size_t>(i + rx)] * src.at(reflect_index(x + i, w), y, c);
        }
        tmp.at(x, y, c) = static_cast<float>(acc);
      }
    }
  });

  Raster out(w, h, ch);
  parallel_for(exec, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int j = -ry; j <= ry; ++j) {
          acc += taps_y[static_cast<std::size_t>(j + ry)] * tmp.at(x, reflect_index(y + j, h), c);
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  });
  return out;
}

Raster gaussian_blur(const Raster& src, double sigma, Exec exec, double truncate) {
  const auto taps = gaussian_weights(sigma, truncate);
  return separable_filter(src, taps, taps, exec);
}

Raster correlate(const Raster& src, const Kernel2D& kernel, Exec exec) {
  const int w = src.width;
  const int h = src.height;
  const int ch = src.channels;
  // Only non-zero taps are visited; motion kernels are mostly empty.
  struct Tap {
    int dx, dy;
    double weight;
  };
  std::vector<Tap> taps;
  for (int dy = -kernel.radius_y; dy <= kernel.radius_y; ++dy) {
    for (int dx = -kernel.radius_x; dx <= kernel.radius_x; ++dx) {
      const double wgt = kernel.at(dx, dy);
      if (wgt != 0.0) taps.push_back({dx, dy, wgt});
    }
  }
  Raster out(w, h, ch);
  parallel_for(exec, h, [&](int y) {
    std::vector<double> acc(static_cast<std::size_t>(ch));
    for (int x = 0; x < w; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (const Tap& t : taps) {
        const int sx = reflect_index(x + t.dx, w);
        const int sy = reflect_index(y + t.dy, h);
        for (int c = 0; c < ch; ++c) acc[static_cast<std::size_t>(c)] += t.weight * src.at(sx, sy, c);
      }
      for (int c = 0; c < ch; ++c) out.at(x, y, c) = static_cast<float>(acc[static_cast<std::size_t>(c)]);
    }
  });
  return out;
}

Raster box_blur(const Raster& src, int size, Exec exec) {
  const std::vector<double> taps(static_cast<std::size_t>(size), 1.0 / size);
  return separable_filter(src, taps, taps, exec);
}

float sample_bilinear(const Raster& src, double x, double y, int c) noexcept {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double ax = x - fx;
  const double ay = y - fy;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int xa = reflect_index(x0, src.width);
  const int xb = reflect_index(x0 + 1, src.width);
  const int ya = reflect_index(y0, src.height);
  const int yb = reflect_index(y0 + 1, src.height);
  const double top = (1.0 - ax) * src.at(xa, ya, c) + ax * src.at(xb, ya, c);
  const double bottom = (1.0 - ax) * src.at(xa, yb, c) + ax * src.at(xb, yb, c);
  return static_cast<float>((1.0 - ay) * top + ay * bottom);
}

Raster zoom_center(const Raster& src, double factor, Exec exec) {
  const double cx = (src.width - 1) / 2.0;
  const double cy = (src.height - 1) / 2.0;
  Raster out(src.width, src.height, src.channels);
  parallel_for(exec, src.height, [&](int y) {
    const double sy = cy + (y - cy) / factor;
    for (int x = 0; x < src.width; ++x) {
      const double sx = cx + (x - cx) / factor;
      for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = sample_bilinear(src, sx, sy, c);
    }
  });
  return out;
}

Raster resize_nearest(const Raster& src, int width, int height, Exec exec) {
  if (width < 1 || height < 1) throw Error(ErrorCode::ImageTooSmall, "resize target below 1 pixel");
  Raster out(width, height, src.channels);
  const auto source_of = [](int d, int n_src, int n_dst) {
    const long long s = (2LL * d + 1) * n_src / (2LL * n_dst);
    return static_cast<int>(std::min<long long>(s, n_src - 1));
  };
  parallel_for(exec, height, [&](int y) {
    const int sy = source_of(y, src.height, height);
    for (int x = 0; x < width; ++x) {
      const int sx = source_of(x, src.width, width);
      for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = src.at(sx, sy, c);
    }
  });
  return out;
}

}  // namespace sprobe::corruption::kernels
