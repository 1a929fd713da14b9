#include "sprobe/corruption/corrupt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "sprobe/corruption/kernels.hpp"
#include "sprobe/error.hpp"
#include "sprobe/image_io.hpp"
#include "sprobe/numeric.hpp"
#include "sprobe/rng.hpp"

namespace sprobe::corruption {

namespace {

using kernels::Raster;
using rng::CounterRng;

// Sub-streams within one corruption kind.
CounterRng stream_for(const CorruptionSpec& spec, std::uint64_t sub) {
  return CounterRng(spec.seed, static_cast<std::uint64_t>(spec.kind) * 16 + sub);
}

template <class PerElement>
Raster map_elements(const Raster& src, Exec exec, PerElement&& fn) {
  Raster out(src.width, src.height, src.channels);
  parallel_for(exec, src.height, [&](int y) {
    for (int x = 0; x < src.width; ++x) {
      for (int c = 0; c < src.channels; ++c) {
        const std::size_t i = src.index(x, y, c);
        out.data[i] = fn(src.data[i], i);
      }
    }
  });
  return out;
}

Raster single_channel(int width, int height) { return Raster(width, height, 1); }

double luma(const Raster& img, int x, int y) {
  return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
}

// --- colour space -----------------------------------------------------------

struct Hsv {
  double h, s, v;
};

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out{0.0, mx > 0.0 ? delta / mx : 0.0, mx};
  if (delta > 0.0) {
    double h;
    if (r == mx) {
      h = (g - b) / delta;
    } else if (g == mx) {
      h = 2.0 + (b - r) / delta;
    } else {
      h = 4.0 + (r - g) / delta;
    }
    h /= 6.0;
    out.h = h - std::floor(h);
  }
  return out;
}

std::array<double, 3> hsv_to_rgb(const Hsv& hsv) {
  const double h6 = hsv.h * 6.0;
  const double fl = std::floor(h6);
  const double f = h6 - fl;
  const int sector = static_cast<int>(fl) % 6;
  const double v = hsv.v;
  const double p = v * (1.0 - hsv.s);
  const double q = v * (1.0 - f * hsv.s);
  const double t = v * (1.0 - (1.0 - f) * hsv.s);
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

template <class HsvFn>
Raster map_hsv(const Raster& src, Exec exec, HsvFn&& fn) {
  Raster out(src.width, src.height, 3);
  parallel_for(exec, src.height, [&](int y) {
    for (int x = 0; x < src.width; ++x) {
      Hsv hsv = rgb_to_hsv(src.at(x, y, 0), src.at(x, y, 1), src.at(x, y, 2));
      fn(hsv);
      const auto rgb = hsv_to_rgb(hsv);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(rgb[static_cast<std::size_t>(c)]);
    }
  });
  return out;
}

// --- noise ------------------------------------------------------------------

Raster gaussian_noise(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double sigma = p.get("sigma");
  const auto rng = stream_for(spec, 0);
  return map_elements(img, exec, [&](float v, std::size_t i) {
    return static_cast<float>(v + sigma * rng.normal(i));
  });
}

Raster shot_noise(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double c = p.get("c");
  const auto rng = stream_for(spec, 0);
  return map_elements(img, exec, [&](float v, std::size_t i) {
    const double lambda = std::clamp(static_cast<double>(v), 0.0, 1.0) * c;
    return static_cast<float>(static_cast<double>(rng.poisson(i, lambda)) / c);
  });
}

Raster impulse_noise(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double amount = p.get("c");
  const auto hit = stream_for(spec, 0);
  const auto salt = stream_for(spec, 1);
  return map_elements(img, exec, [&](float v, std::size_t i) {
    if (hit.uniform(i) >= amount) return v;
    return salt.uniform(i) < 0.5 ? 0.0f : 1.0f;
  });
}

Raster speckle_noise(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double c = p.get("c");
  const auto rng = stream_for(spec, 0);
  return map_elements(img, exec, [&](float v, std::size_t i) {
    return static_cast<float>(v + v * c * rng.normal(i));
  });
}

// --- blur -------------------------------------------------------------------

Raster defocus_blur(const Raster& img, const ParamVector& p, Exec exec) {
  return kernels::correlate(img, kernels::disk_kernel(p.get("radius"), p.get("alias_blur")), exec);
}

Raster glass_blur(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double sigma = p.get("sigma");
  const int max_delta = static_cast<int>(p.get("max_delta"));
  const int iterations = static_cast<int>(p.get("iterations"));
  Raster x = kernels::gaussian_blur(img, sigma, exec);
  const auto rng = stream_for(spec, 0);
  const int w = x.width;
  const int h = x.height;
  // Local pixel shuffling is order dependent, so this stage stays serial.
  std::uint64_t counter = 0;
  for (int it = 0; it < iterations; ++it) {
    for (int yy = h - max_delta; yy > max_delta; --yy) {
      for (int xx = w - max_delta; xx > max_delta; --xx) {
        const int dx = static_cast<int>(rng.uniform_int(counter++, -max_delta, max_delta - 1));
        const int dy = static_cast<int>(rng.uniform_int(counter++, -max_delta, max_delta - 1));
        for (int c = 0; c < x.channels; ++c) std::swap(x.at(xx, yy, c), x.at(xx + dx, yy + dy, c));
      }
    }
  }
  return kernels::gaussian_blur(x, sigma, exec);
}

Raster motion_blur(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double angle = stream_for(spec, 0).uniform(0, -45.0, 45.0);
  return kernels::correlate(img, kernels::motion_kernel(p.get("radius"), p.get("sigma"), angle), exec);
}

Raster zoom_blur(const Raster& img, const ParamVector& p, Exec exec) {
  Raster acc(img.width, img.height, img.channels);
  for (const auto& [name, factor] : p.entries()) {
    const Raster zoomed = kernels::zoom_center(img, factor, exec);
    parallel_for(exec, img.height, [&](int y) {
      for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < img.channels; ++c) acc.at(x, y, c) += zoomed.at(x, y, c);
      }
    });
  }
  const double denom = static_cast<double>(p.size()) + 1.0;
  return map_elements(img, exec, [&](float v, std::size_t i) {
    return static_cast<float>((static_cast<double>(v) + acc.data[i]) / denom);
  });
}

Raster gaussian_blur(const Raster& img, const ParamVector& p, Exec exec) {
  return kernels::gaussian_blur(img, p.get("sigma"), exec);
}

// --- weather ----------------------------------------------------------------

Raster snow(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double loc = p.get("c1");
  const double scale = p.get("c2");
  const double zoom = p.get("c3");
  const double threshold = p.get("c4");
  const double radius = p.get("c5");
  const double sigma = p.get("c6");
  const double blend = p.get("c7");
  const int w = img.width;
  const int h = img.height;

  const auto field_rng = stream_for(spec, 0);
  Raster layer = single_channel(w, h);
  parallel_for(exec, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = layer.index(x, y, 0);
      layer.data[i] = static_cast<float>(loc + scale * field_rng.normal(i));
    }
  });
  layer = kernels::zoom_center(layer, zoom, exec);
  for (float& v : layer.data) {
    if (v < threshold) v = 0.0f;
  }
  const double angle = stream_for(spec, 1).uniform(0, -135.0, -45.0);
  layer = kernels::correlate(layer, kernels::motion_kernel(radius, sigma, angle), exec);

  Raster out(w, h, 3);
  parallel_for(exec, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const double bright = luma(img, x, y) * 1.5 + 0.5;
      const double flakes = layer.at(x, y, 0) + layer.at(w - 1 - x, h - 1 - y, 0);
      for (int c = 0; c < 3; ++c) {
        const double v = img.at(x, y, c);
        const double base = blend * v + (1.0 - blend) * std::max(v, bright);
        out.at(x, y, c) = static_cast<float>(base + flakes);
      }
    }
  });
  return out;
}

// Octave-summed value noise in [0,1]: 4 octaves, persistence 0.5, base
// lattice spacing 32 px, smoothstep interpolation.
Raster fractal_value_noise(int w, int h, const CorruptionSpec& spec, Exec exec) {
  constexpr int kOctaves = 4;
  constexpr double kPersistence = 0.5;
  constexpr double kBaseCell = 32.0;
  Raster out = single_channel(w, h);
  parallel_for(exec, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double amplitude = 1.0;
      double total = 0.0;
      double norm = 0.0;
      for (int o = 0; o < kOctaves; ++o) {
        const auto lattice = stream_for(spec, 2 + static_cast<std::uint64_t>(o));
        const double cell = kBaseCell / static_cast<double>(1 << o);
        const double gx = x / cell;
        const double gy = y / cell;
        const auto ix = static_cast<std::uint64_t>(std::floor(gx));
        const auto iy = static_cast<std::uint64_t>(std::floor(gy));
        const double fx = gx - std::floor(gx);
        const double fy = gy - std::floor(gy);
        const double sx = fx * fx * (3.0 - 2.0 * fx);
        const double sy = fy * fy * (3.0 - 2.0 * fy);
        const auto corner = [&](std::uint64_t cx, std::uint64_t cy) { return lattice.uniform((cy << 20) | cx); };
        const double top = corner(ix, iy) * (1 - sx) + corner(ix + 1, iy) * sx;
        const double bottom = corner(ix, iy + 1) * (1 - sx) + corner(ix + 1, iy + 1) * sx;
        total += amplitude * (top * (1 - sy) + bottom * sy);
        norm += amplitude;
        amplitude *= kPersistence;
      }
      out.at(x, y, 0) = static_cast<float>(total / norm);
    }
  });
  return out;
}

Raster frost(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double image_weight = p.get("c1");
  const double frost_weight = p.get("c2");
  // Pale blue-white ice tint.
  constexpr std::array<double, 3> kTint = {0.82, 0.90, 1.0};
  const Raster texture = fractal_value_noise(img.width, img.height, spec, exec);
  Raster out(img.width, img.height, 3);
  parallel_for(exec, img.height, [&](int y) {
    for (int x = 0; x < img.width; ++x) {
      const double t = texture.at(x, y, 0);
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<float>(image_weight * img.at(x, y, c) +
                                             frost_weight * t * kTint[static_cast<std::size_t>(c)]);
      }
    }
  });
  return out;
}

// Diamond-square plasma fractal on a toroidal power-of-two grid, scaled to
// [0,1]. The wibble amplitude starts at 100 and is divided by decay per level.
std::vector<double> plasma_fractal(int mapsize, double decay, const CorruptionSpec& spec) {
  std::vector<double> map(static_cast<std::size_t>(mapsize) * mapsize, 0.0);
  const auto at = [&](int y, int x) -> double& {
    y = ((y % mapsize) + mapsize) % mapsize;
    x = ((x % mapsize) + mapsize) % mapsize;
    return map[static_cast<std::size_t>(y) * mapsize + x];
  };
  double wibble = 100.0;
  int step = mapsize;
  std::uint64_t level = 0;
  while (step >= 2) {
    const int half = step / 2;
    const auto squares = stream_for(spec, 8 + 3 * level);
    const auto diamonds_a = stream_for(spec, 9 + 3 * level);
    const auto diamonds_b = stream_for(spec, 10 + 3 * level);
    const auto jitter = [&](const CounterRng& r, int y, int x) {
      const auto n = static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(mapsize) + static_cast<std::uint64_t>(x);
      return wibble * r.uniform(n, -wibble, wibble);
    };
    for (int y = 0; y < mapsize; y += step) {
      for (int x = 0; x < mapsize; x += step) {
        const double sum = at(y, x) + at(y + step, x) + at(y, x + step) + at(y + step, x + step);
        at(y + half, x + half) = sum / 4.0 + jitter(squares, y + half, x + half);
      }
    }
    for (int y = 0; y < mapsize; y += step) {
      for (int x = half; x < mapsize; x += step) {
        const double sum = at(y + half, x) + at(y - half, x) + at(y, x - half) + at(y, x + half);
        at(y, x) = sum / 4.0 + jitter(diamonds_a, y, x);
      }
    }
    for (int y = half; y < mapsize; y += step) {
      for (int x = 0; x < mapsize; x += step) {
        const double sum = at(y, x - half) + at(y, x + half) + at(y - half, x) + at(y + half, x);
        at(y, x) = sum / 4.0 + jitter(diamonds_b, y, x);
      }
    }
    step = half;
    wibble /= decay;
    ++level;
  }
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : map) v = range > 0.0 ? (v - min) / range : 0.0;
  return map;
}

Raster fog(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double strength = p.get("c1");
  const double decay = p.get("c2");
  int mapsize = 2;
  while (mapsize < std::max(img.width, img.height)) mapsize *= 2;
  const auto plasma = plasma_fractal(mapsize, decay, spec);
  const double max_val = *std::max_element(img.data.begin(), img.data.end());
  const double scale = max_val / (max_val + strength);
  Raster out(img.width, img.height, 3);
  parallel_for(exec, img.height, [&](int y) {
    for (int x = 0; x < img.width; ++x) {
      const double f = strength * plasma[static_cast<std::size_t>(y) * mapsize + x];
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>((img.at(x, y, c) + f) * scale);
    }
  });
  return out;
}

// Two-pass 3-4 chamfer distance to the nearest seed pixel, in pixel units.
std::vector<double> chamfer_distance(const std::vector<bool>& seeds, int w, int h) {
  constexpr double kInf = 1e9;
  std::vector<double> d(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) d[i] = seeds[i] ? 0.0 : kInf;
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  const auto relax = [&](int x, int y, int nx, int ny, double cost) {
    if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
    d[idx(x, y)] = std::min(d[idx(x, y)], d[idx(nx, ny)] + cost);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      relax(x, y, x - 1, y, 3);
      relax(x, y, x, y - 1, 3);
      relax(x, y, x - 1, y - 1, 4);
      relax(x, y, x + 1, y - 1, 4);
    }
  }
  for (int y = h - 1; y >= 0; --y) {
    for (int x = w - 1; x >= 0; --x) {
      relax(x, y, x + 1, y, 3);
      relax(x, y, x, y + 1, 3);
      relax(x, y, x + 1, y + 1, 4);
      relax(x, y, x - 1, y + 1, 4);
    }
  }
  for (double& v : d) v /= 3.0;
  return d;
}

Raster spatter(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double loc = p.get("c1");
  const double scale = p.get("c2");
  const double sigma = p.get("c3");
  const double threshold = p.get("c4");
  const double intensity = p.get("c5");
  const bool mud = p.get("c6") != 0.0;
  const int w = img.width;
  const int h = img.height;

  const auto field_rng = stream_for(spec, 0);
  Raster liquid = single_channel(w, h);
  parallel_for(exec, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = liquid.index(x, y, 0);
      liquid.data[i] = static_cast<float>(loc + scale * field_rng.normal(i));
    }
  });
  liquid = kernels::gaussian_blur(liquid, sigma, exec);
  for (float& v : liquid.data) {
    if (v < threshold) v = 0.0f;
  }

  Raster out(w, h, 3);
  if (mud) {
    Raster mask = single_channel(w, h);
    for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = liquid.data[i] > threshold ? 1.0f : 0.0f;
    mask = kernels::gaussian_blur(mask, intensity, exec);
    constexpr std::array<double, 3> kMud = {63 / 255.0, 42 / 255.0, 20 / 255.0};
    parallel_for(exec, h, [&](int y) {
      for (int x = 0; x < w; ++x) {
        double m = mask.at(x, y, 0);
        if (m < 0.8) m = 0.0;
        for (int c = 0; c < 3; ++c) {
          out.at(x, y, c) = static_cast<float>(img.at(x, y, c) * (1.0 - m) + kMud[static_cast<std::size_t>(c)] * m);
        }
      }
    });
    return out;
  }

  // Water: droplet rims found from the thresholded layer, shaded by an
  // embossed, histogram-equalized distance map (truncated at 20 px).
  std::vector<bool> rim(static_cast<std::size_t>(w) * h, false);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool wet = liquid.at(x, y, 0) > 0.0f;
      bool boundary = false;
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        if ((liquid.at(nx[k], ny[k], 0) > 0.0f) != wet) boundary = true;
      }
      rim[static_cast<std::size_t>(y) * w + x] = boundary;
    }
  }
  Raster dist = single_channel(w, h);
  {
    const auto d = chamfer_distance(rim, w, h);
    for (std::size_t i = 0; i < d.size(); ++i) dist.data[i] = static_cast<float>(std::min(d[i], 20.0));
  }
  dist = kernels::box_blur(dist, 3, exec);

  // Histogram equalization on 8-bit codes.
  std::array<std::uint64_t, 256> hist{};
  std::vector<int> codes(dist.data.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    codes[i] = static_cast<int>(std::clamp(std::lround(dist.data[i]), 0L, 255L));
    ++hist[static_cast<std::size_t>(codes[i])];
  }
  std::array<double, 256> cdf{};
  std::uint64_t running = 0;
  std::uint64_t first = 0;
  for (std::size_t k = 0; k < 256; ++k) {
    if (first == 0 && hist[k] != 0) first = hist[k];
    running += hist[k];
    cdf[k] = static_cast<double>(running);
  }
  const double total = static_cast<double>(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const double denom = total - static_cast<double>(first);
    const double eq = denom > 0.0 ? (cdf[static_cast<std::size_t>(codes[i])] - first) / denom * 255.0 : 0.0;
    dist.data[i] = static_cast<float>(std::round(eq));
  }

  kernels::Kernel2D emboss;
  emboss.radius_x = 1;
  emboss.radius_y = 1;
  emboss.weights = {-2, -1, 0, -1, 1, 1, 0, 1, 2};
  dist = kernels::correlate(dist, emboss, exec);
  for (float& v : dist.data) v = std::clamp(std::round(v), 0.0f, 255.0f);
  dist = kernels::box_blur(dist, 3, exec);

  double peak = 0.0;
  std::vector<double> m(dist.data.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = static_cast<double>(liquid.data[i]) * dist.data[i];
    peak = std::max(peak, m[i]);
  }
  constexpr std::array<double, 3> kWater = {175 / 255.0, 238 / 255.0, 238 / 255.0};
  parallel_for(exec, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double shade = peak > 0.0 ? m[i] / peak * intensity : 0.0;
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<float>(img.at(x, y, c) + shade * kWater[static_cast<std::size_t>(c)]);
      }
    }
  });
  return out;
}

// --- photometric ------------------------------------------------------------

Raster brightness(const Raster& img, const ParamVector& p, Exec exec) {
  const double c = p.get("c");
  return map_hsv(img, exec, [c](Hsv& hsv) { hsv.v = std::clamp(hsv.v + c, 0.0, 1.0); });
}

Raster contrast(const Raster& img, const ParamVector& p, Exec exec) {
  const double c = p.get("c");
  std::array<double, 3> means{};
  for (int ch = 0; ch < 3; ++ch) {
    KahanSum sum;
    for (std::size_t i = static_cast<std::size_t>(ch); i < img.data.size(); i += 3) sum.add(img.data[i]);
    means[static_cast<std::size_t>(ch)] = sum.value() / static_cast<double>(img.data.size() / 3);
  }
  return map_elements(img, exec, [&](float v, std::size_t i) {
    const double m = means[i % 3];
    return static_cast<float>((v - m) * c + m);
  });
}

Raster saturate(const Raster& img, const ParamVector& p, Exec exec) {
  const double gain = p.get("c1");
  const double offset = p.get("c2");
  return map_hsv(img, exec, [&](Hsv& hsv) { hsv.s = std::clamp(hsv.s * gain + offset, 0.0, 1.0); });
}

// --- digital ----------------------------------------------------------------

Raster elastic(const Raster& img, const ParamVector& p, const CorruptionSpec& spec, Exec exec) {
  const double alpha = p.get("c1");
  const double sigma = p.get("c2");
  const double affine_jitter = p.get("c3");
  const int w = img.width;
  const int h = img.height;

  // Random affine: three anchor points around the centre, each displaced by
  // U(-jitter, jitter); solve for the forward map src -> dst.
  const double cx = std::floor(w / 2.0);
  const double cy = std::floor(h / 2.0);
  const double sq = std::floor(std::min(w, h) / 3.0);
  const std::array<std::array<double, 2>, 3> src_pts = {{{cx + sq, cy + sq}, {cx + sq, cy - sq}, {cx - sq, cy - sq}}};
  const auto jitter = stream_for(spec, 0);
  std::array<std::array<double, 2>, 3> dst_pts{};
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t d = 0; d < 2; ++d) {
      dst_pts[k][d] = src_pts[k][d] + jitter.uniform(k * 2 + d, -affine_jitter, affine_jitter);
    }
  }
  // Forward affine A with dst = A * [x, y, 1]; solved by Cramer's rule.
  const double x1 = src_pts[0][0], y1 = src_pts[0][1];
  const double x2 = src_pts[1][0], y2 = src_pts[1][1];
  const double x3 = src_pts[2][0], y3 = src_pts[2][1];
  const double det = x1 * (y2 - y3) - y1 * (x2 - x3) + (x2 * y3 - x3 * y2);
  std::array<std::array<double, 3>, 2> forward{};
  for (std::size_t r = 0; r < 2; ++r) {
    const double u1 = dst_pts[0][r], u2 = dst_pts[1][r], u3 = dst_pts[2][r];
    forward[r][0] = (u1 * (y2 - y3) - y1 * (u2 - u3) + (u2 * y3 - u3 * y2)) / det;
    forward[r][1] = (x1 * (u2 - u3) - u1 * (x2 - x3) + (x2 * u3 - x3 * u2)) / det;
    forward[r][2] = (x1 * (y2 * u3 - y3 * u2) - y1 * (x2 * u3 - x3 * u2) + u1 * (x2 * y3 - x3 * y2)) / det;
  }
  const double a = forward[0][0], b = forward[0][1], tx = forward[0][2];
  const double c = forward[1][0], d = forward[1][1], ty = forward[1][2];
  const double inv_det = 1.0 / (a * d - b * c);

  const auto fx_rng = stream_for(spec, 1);
  const auto fy_rng = stream_for(spec, 2);
  Raster field_x = single_channel(w, h);
  Raster field_y = single_channel(w, h);
  parallel_for(exec, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = field_x.index(x, y, 0);
      field_x.data[i] = static_cast<float>(fx_rng.uniform(i, -1.0, 1.0));
      field_y.data[i] = static_cast<float>(fy_rng.uniform(i, -1.0, 1.0));
    }
  });
  field_x = kernels::gaussian_blur(field_x, sigma, exec, 3.0);
  field_y = kernels::gaussian_blur(field_y, sigma, exec, 3.0);

  Raster out(w, h, 3);
  parallel_for(exec, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const double qx = x + alpha * field_x.at(x, y, 0) - tx;
      const double qy = y + alpha * field_y.at(x, y, 0) - ty;
      const double sx = (d * qx - b * qy) * inv_det;
      const double sy = (-c * qx + a * qy) * inv_det;
      for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = kernels::sample_bilinear(img, sx, sy, ch);
    }
  });
  return out;
}

int pixelate_side(int side, double factor) {
  return static_cast<int>(std::floor(side * factor + 1e-9));
}

Raster pixelate(const Raster& img, const ParamVector& p, Exec exec) {
  const double factor = p.get("c");
  const Raster small = kernels::resize_nearest(img, pixelate_side(img.width, factor),
                                               pixelate_side(img.height, factor), exec);
  return kernels::resize_nearest(small, img.width, img.height, exec);
}

Raster jpeg(const Raster& img, const ParamVector& p) {
  const int quality = static_cast<int>(p.get("quality"));
  Image clipped(img.width, img.height, img.data);
  clipped.clip();
  std::vector<std::uint8_t> bytes;
  try {
    bytes = io::encode_jpeg(clipped, quality);
    return kernels::from_image(io::decode_jpeg(bytes));
  } catch (const Error& e) {
    throw Error(ErrorCode::EncodeFailure, std::string("jpeg round trip failed: ") + e.what());
  }
}

}  // namespace

int minimum_side(Kind kind, Severity severity) {
  const ParamVector p = resolve_params(kind, severity);
  switch (kind) {
    case Kind::glass_blur:
      return std::max(Image::kMinSide, 4 * static_cast<int>(p.get("max_delta")) + 1);
    case Kind::pixelate: {
      int side = Image::kMinSide;
      while (pixelate_side(side, p.get("c")) < 1) ++side;
      return side;
    }
    default:
      return Image::kMinSide;
  }
}

Image apply_corruption(const Image& image, const CorruptionSpec& spec, Exec exec) {
  const ParamVector p = resolve_params(spec.kind, spec.severity);
  const int min_side = minimum_side(spec.kind, spec.severity);
  if (image.width() < min_side || image.height() < min_side) {
    throw Error(ErrorCode::ImageTooSmall, spec_label(spec.kind, spec.severity) + " needs at least " +
                                              std::to_string(min_side) + "x" + std::to_string(min_side) +
                                              " pixels");
  }
  const Raster src = kernels::from_image(image);
  Raster out;
  switch (spec.kind) {
    case Kind::gaussian_noise: out = gaussian_noise(src, p, spec, exec); break;
    case Kind::shot_noise: out = shot_noise(src, p, spec, exec); break;
    case Kind::impulse_noise: out = impulse_noise(src, p, spec, exec); break;
    case Kind::speckle_noise: out = speckle_noise(src, p, spec, exec); break;
    case Kind::defocus_blur: out = defocus_blur(src, p, exec); break;
    case Kind::glass_blur: out = glass_blur(src, p, spec, exec); break;
    case Kind::motion_blur: out = motion_blur(src, p, spec, exec); break;
    case Kind::zoom_blur: out = zoom_blur(src, p, exec); break;
    case Kind::gaussian_blur: out = gaussian_blur(src, p, exec); break;
    case Kind::snow: out = snow(src, p, spec, exec); break;
    case Kind::frost: out = frost(src, p, spec, exec); break;
    case Kind::fog: out = fog(src, p, spec, exec); break;
    case Kind::spatter: out = spatter(src, p, spec, exec); break;
    case Kind::brightness: out = brightness(src, p, exec); break;
    case Kind::contrast: out = contrast(src, p, exec); break;
    case Kind::saturate: out = saturate(src, p, exec); break;
    case Kind::elastic: out = elastic(src, p, spec, exec); break;
    case Kind::pixelate: out = pixelate(src, p, exec); break;
    case Kind::jpeg: out = jpeg(src, p); break;
  }
  return kernels::to_image(std::move(out));
}

}  // namespace sprobe::corruption
