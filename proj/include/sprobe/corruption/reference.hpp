#pragma once

#include "sprobe/corruption/kernels.hpp"

// Straightforward single-threaded versions of the kernel primitives, kept as
// the baseline for correctness tests and the benchmark. They favour the
// obvious formulation (full 2-D loops, no tap pruning) over speed.
namespace sprobe::corruption::reference {

using kernels::Kernel2D;
using kernels::Raster;

// Full 2-D Gaussian (outer product of the 1-D taps) applied directly.
Raster gaussian_blur(const Raster& src, double sigma, double truncate = 4.0);
Raster correlate(const Raster& src, const Kernel2D& kernel);
Raster zoom_center(const Raster& src, double factor);
Raster resize_nearest(const Raster& src, int width, int height);

}  // namespace sprobe::corruption::reference
