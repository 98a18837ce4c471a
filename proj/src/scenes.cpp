#include "spadcam/scenes.hpp"

#include <cmath>

namespace spadcam {

void BallSceneSpec::validate() const {
  if (!(ball_radius >= 0.0) || !std::isfinite(ball_radius)) throw ValidationError("ball radius must be >= 0");
  if (!(screen_distance > 0.0) || !std::isfinite(screen_distance))
    throw ValidationError("screen distance must be positive");
  if (!(field_height > 0.0) || !std::isfinite(field_height)) throw ValidationError("field height must be positive");
  if (ball_radius > 0.0) {
    if (!(ball_center_z - ball_radius >= 0.0)) throw ValidationError("ball reaches behind the sensor");
    if (!(ball_center_z + ball_radius <= screen_distance)) throw ValidationError("ball must sit in front of the screen");
  }
  if (!(ball_reflectivity >= 0.0) || !(screen_reflectivity >= 0.0) || !std::isfinite(ball_reflectivity) ||
      !std::isfinite(screen_reflectivity))
    throw ValidationError("reflectivities must be finite and >= 0");
}

double pixel_pitch(const GridShape& shape, const BallSceneSpec& spec) {
  return spec.field_height / static_cast<double>(shape.rows);
}

SceneModel make_ball_scene(const GridShape& shape, const BallSceneSpec& spec) {
  spec.validate();
  if (shape.size() == 0) throw ValidationError("scene grid is empty");
  const double pitch = pixel_pitch(shape, spec);
  const double r2 = spec.ball_radius * spec.ball_radius;
  SceneModel s{shape, std::vector<double>(shape.size(), spec.screen_reflectivity),
               std::vector<double>(shape.size(), spec.screen_distance)};
  for (std::size_t c = 0; c < shape.cols; ++c) {
    const double x = (static_cast<double>(c) + 0.5 - 0.5 * static_cast<double>(shape.cols)) * pitch - spec.ball_center_x;
    for (std::size_t r = 0; r < shape.rows; ++r) {
      const double y =
          (static_cast<double>(r) + 0.5 - 0.5 * static_cast<double>(shape.rows)) * pitch - spec.ball_center_y;
      const double d2 = x * x + y * y;
      if (spec.ball_radius <= 0.0 || d2 >= r2) continue;
      const std::size_t i = c * shape.rows + r;
      s.depth[i] = spec.ball_center_z - std::sqrt(r2 - d2);
      s.reflectivity[i] = spec.ball_reflectivity;
    }
  }
  return s;
}

SceneModel make_ball_scene(const GridShape& shape, const BallSceneSpec& spec, const SystemParams& params) {
  SceneModel s = make_ball_scene(shape, spec);
  s.validate(params);
  return s;
}

SceneModel make_plane_scene(const GridShape& shape, double depth, double reflectivity) {
  if (shape.size() == 0) throw ValidationError("scene grid is empty");
  SceneModel s{shape, std::vector<double>(shape.size(), reflectivity), std::vector<double>(shape.size(), depth)};
  s.validate();
  return s;
}

}  // namespace spadcam
