#pragma once

#include "sprobe/corruption/catalog.hpp"
#include "sprobe/image.hpp"
#include "sprobe/parallel.hpp"

namespace sprobe::corruption {

// Returns a corrupted copy of image. Identical (image, spec) pairs give
// bit-identical output for either Exec policy and any thread count; the
// output is clipped to [0,1] and has the input's dimensions.
//
// Throws ImageTooSmall when the raster cannot hold the kernel (glass blur
// swap window, pixelate down-sampling below one pixel) and EncodeFailure if
// the JPEG round trip fails.
Image apply_corruption(const Image& image, const CorruptionSpec& spec, Exec exec = Exec::parallel);

// Smallest width/height accepted for the kind at that severity.
int minimum_side(Kind kind, Severity severity);

}  // namespace sprobe::corruption
