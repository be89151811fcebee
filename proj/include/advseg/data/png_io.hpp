#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "advseg/core/maps.hpp"

namespace advseg {

struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;
};

using Rgb = std::array<std::uint8_t, 3>;

/// Reads any PNG as 8-bit RGB scaled to [0,1]. Throws Ingestion on failure.
Image read_png_rgb(const std::filesystem::path& path);

/// Reads any PNG as 8-bit single channel. Throws Ingestion on failure.
GrayImage read_png_gray(const std::filesystem::path& path);

/// Channel values are quantized with round(255 * v).
void write_png_rgb(const std::filesystem::path& path, const Image& image);
void write_png_gray(const std::filesystem::path& path, const GrayImage& image);
/// Palette-indexed PNG; `pixels` are indices into `palette` (<= 256 entries).
void write_png_indexed(const std::filesystem::path& path, const GrayImage& image,
                       const std::vector<Rgb>& palette);

}  // namespace advseg
