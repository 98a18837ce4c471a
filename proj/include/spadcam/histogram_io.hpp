// ============================================================================
// histogram_io.hpp -- on-disk formats for cubes, scenes and matrices
//
// Cube binary layout, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "SPHC"
//   4       4     u32 format version (1)
//   8       4     u32 rows
//   12      4     u32 cols
//   16      4     u32 bins (m)
//   20      4*n*m u32 counts, pixel-major: pixel 1 bins 1..m, pixel 2, ...
//
// Pixels follow the column-stacked order.
//
// Scene text format:
//
//   # spadcam scene v1
//   rows <R>
//   cols <C>
//   pixel reflectivity depth_m
//   1 <kappa_1> <z_1>
//   ...
//
// Blank lines and lines starting with '#' are ignored; values are written
// with 17 significant digits so a save/load round trip is exact.
// ============================================================================
#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "spadcam/core.hpp"
#include "spadcam/forward_model.hpp"

namespace spadcam {

void write_cube(const std::filesystem::path& path, const HistogramCube& cube);
HistogramCube read_cube(const std::filesystem::path& path);
void write_cube(std::ostream& os, const HistogramCube& cube);
HistogramCube read_cube(std::istream& is);

/// One row per pixel: pixel,bin_1,...,bin_m.
void write_cube_csv(const std::filesystem::path& path, const HistogramCube& cube);

void write_scene(const std::filesystem::path& path, const SceneModel& scene);
SceneModel read_scene(const std::filesystem::path& path);

/// Row-per-line CSV with an optional header line.
void write_matrix_csv(const std::filesystem::path& path, const Matrix<double>& m, const std::string& header = {});

}  // namespace spadcam
