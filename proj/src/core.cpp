#include "spadcam/core.hpp"

#include <cmath>
#include <string>

namespace spadcam {

GridShape::GridShape(std::size_t r, std::size_t c) : rows(r), cols(c) {
  if (r == 0 || c == 0) throw ValidationError("grid shape must have at least one row and one column");
}

RowCol pixel_to_rowcol(std::size_t pixel, const GridShape& shape) {
  if (pixel < 1 || pixel > shape.size())
    throw ValidationError("pixel index " + std::to_string(pixel) + " outside 1.." +
                          std::to_string(shape.size()));
  return {(pixel - 1) % shape.rows + 1, (pixel - 1) / shape.rows + 1};
}

std::size_t rowcol_to_pixel(RowCol rc, const GridShape& shape) {
  if (rc.row < 1 || rc.row > shape.rows || rc.col < 1 || rc.col > shape.cols)
    throw ValidationError("row/col (" + std::to_string(rc.row) + "," + std::to_string(rc.col) +
                          ") outside grid");
  return (rc.col - 1) * shape.rows + rc.row;
}

void SystemParams::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("eta must lie in (0, 1]");
  if (!(ambient_rate >= 0.0) || !(dark_rate >= 0.0) || !(repetitions >= 0.0))
    throw ValidationError("rates and repetition count must be non-negative");
  if (bins < 1) throw ValidationError("need at least one time-bin");
  if (!(bin_width > 0.0)) throw ValidationError("bin width must be positive");
  if (!(repetition_period > 0.0)) throw ValidationError("repetition period must be positive");
  // Relative slack so that e.g. 1410 * 4 ps vs 1/70 MHz is not rejected on rounding.
  if (observation_window() > repetition_period * (1.0 + 1e-12))
    throw ValidationError("observation window m*delta exceeds the repetition period");
  if (deadtime && !(*deadtime >= 0.0)) throw ValidationError("deadtime must be non-negative");
}

void IlluminationConfig::validate(const GridShape& shape) const {
  if (window < 1) throw ValidationError("illumination window must be at least 1");
  if (window > shape.rows || window > shape.cols)
    throw ValidationError("illumination window " + std::to_string(window) + " exceeds image extent " +
                          std::to_string(shape.rows) + "x" + std::to_string(shape.cols));
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in [0, 1)");
}

void SceneModel::validate() const {
  const std::size_t n = shape.size();
  if (n == 0) throw ValidationError("scene has an empty grid");
  if (reflectivity.size() != n || depth.size() != n)
    throw ValidationError("scene vectors do not match the grid size");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(reflectivity[i] >= 0.0) || !std::isfinite(reflectivity[i]))
      throw ValidationError("negative or non-finite reflectivity at pixel " + std::to_string(i + 1));
    if (!(depth[i] >= 0.0) || !std::isfinite(depth[i]))
      throw ValidationError("negative or non-finite depth at pixel " + std::to_string(i + 1));
  }
}

void SceneModel::validate(const SystemParams& params) const {
  validate();
  const double window = params.observation_window();
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (2.0 * depth[i] / kSpeedOfLight >= window)
      throw ValidationError("depth " + std::to_string(depth[i]) + " m at pixel " + std::to_string(i + 1) +
                            " falls outside the observation window");
  }
}

}  // namespace spadcam
