#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sprobe/image.hpp"

namespace sprobe::io {

enum class PngDepth { u8 = 8, u16 = 16 };

// PNG encode/decode. Decoding accepts gray, gray+alpha, RGB and RGBA at 8 or
// 16 bits (alpha dropped, gray replicated). Encoding rounds to nearest code.
std::vector<std::uint8_t> encode_png(const Image& image, PngDepth depth = PngDepth::u8);
Image decode_png(std::span<const std::uint8_t> bytes);

// Baseline JPEG with 4:2:0 chroma subsampling and the islow DCT.
std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality);
Image decode_jpeg(std::span<const std::uint8_t> bytes);

// Reads PNG or JPEG (sniffed from the file signature).
Image read_image(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path, PngDepth depth = PngDepth::u16);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

bool is_image_path(const std::filesystem::path& path);

}  // namespace sprobe::io
