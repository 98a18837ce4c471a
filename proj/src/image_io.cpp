#include "spadcam/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace spadcam {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void png_warning_fn(png_structp, png_const_charp) {}

// libpng reports errors by longjmp; every C++ object used below is created
// before setjmp so nothing with a destructor is skipped.
bool encode(std::FILE* f, const GrayImage& image, std::vector<png_byte>& row) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_fn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
               image.bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t bpp = image.bit_depth == 16 ? 2 : 1;
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      const std::uint16_t v = image.pixels[y * image.width + x];
      if (bpp == 2) {
        row[2 * x] = static_cast<png_byte>(v >> 8);  // PNG is big-endian
        row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
      } else {
        row[x] = static_cast<png_byte>(v);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

bool decode(std::FILE* f, GrayImage& img, std::vector<png_byte>& row) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_fn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  const bool ok_format = png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
                         (png_get_bit_depth(png, info) == 8 || png_get_bit_depth(png, info) == 16) &&
                         png_get_interlace_type(png, info) == PNG_INTERLACE_NONE;
  if (!ok_format) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  const std::size_t bpp = img.bit_depth == 16 ? 2 : 1;
  row.resize(img.width * bpp);
  img.pixels.resize(img.width * img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t x = 0; x < img.width; ++x)
      img.pixels[y * img.width + x] =
          bpp == 2 ? static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]) : row[x];
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

}  // namespace

GrayImage quantize(std::span<const double> values, const GridShape& shape, double lo, double hi, int bit_depth,
                   double gamma) {
  if (values.size() != shape.size()) throw ValidationError("image values do not match the grid");
  if (bit_depth != 8 && bit_depth != 16) throw ValidationError("bit depth must be 8 or 16");
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw ValidationError("image range must satisfy lo < hi");
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  const double top = bit_depth == 8 ? 255.0 : 65535.0;
  GrayImage img{shape.cols, shape.rows, bit_depth, std::vector<std::uint16_t>(shape.size(), 0)};
  for (std::size_t c = 0; c < shape.cols; ++c)
    for (std::size_t r = 0; r < shape.rows; ++r) {
      const double v = values[c * shape.rows + r];
      if (std::isnan(v)) continue;
      double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
      if (gamma != 1.0) t = std::pow(t, 1.0 / gamma);
      img.pixels[r * shape.cols + c] = static_cast<std::uint16_t>(std::lround(t * top));
    }
  return img;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) throw ValidationError("image buffer size mismatch");
  if (image.bit_depth != 8 && image.bit_depth != 16) throw ValidationError("bit depth must be 8 or 16");
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  std::vector<png_byte> row(image.width * (image.bit_depth == 16 ? 2 : 1));
  if (!encode(f.get(), image, row) || std::ferror(f.get())) throw IoError("failed writing " + path.string());
}

GrayImage read_png(const std::filesystem::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path.string());
  GrayImage img;
  std::vector<png_byte> row;
  if (!decode(f.get(), img, row)) throw IoError(path.string() + " is not a readable 8/16-bit grayscale PNG");
  return img;
}

void write_png16(const std::filesystem::path& path, std::span<const double> values, const GridShape& shape,
                 double lo, double hi) {
  write_png(path, quantize(values, shape, lo, hi, 16));
}

void write_preview(const std::filesystem::path& path, std::span<const double> values, const GridShape& shape,
                   double lo, double hi, double gamma) {
  write_png(path, quantize(values, shape, lo, hi, 8, gamma));
}

}  // namespace spadcam
