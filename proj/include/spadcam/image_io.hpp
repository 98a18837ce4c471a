// ============================================================================
// image_io.hpp -- grayscale PNG output for column-stacked images
// ============================================================================
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spadcam/core.hpp"

namespace spadcam {

struct GrayImage {
  std::size_t width{0};
  std::size_t height{0};
  int bit_depth{8};
  std::vector<std::uint16_t> pixels;  // row-major
};

/// Maps [lo, hi] linearly onto [0, 2^bits - 1], clamping outside and writing
/// NaN as 0. `values` is column-stacked over `shape`.
GrayImage quantize(std::span<const double> values, const GridShape& shape, double lo, double hi, int bit_depth,
                   double gamma = 1.0);

void write_png(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_png(const std::filesystem::path& path);

/// 16-bit linear image over [lo, hi].
void write_png16(const std::filesystem::path& path, std::span<const double> values, const GridShape& shape,
                 double lo, double hi);
/// 8-bit preview: normalized to [lo, hi] then raised to 1/gamma.
void write_preview(const std::filesystem::path& path, std::span<const double> values, const GridShape& shape,
                   double lo, double hi, double gamma = 2.2);

}  // namespace spadcam
