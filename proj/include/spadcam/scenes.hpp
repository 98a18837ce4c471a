// ============================================================================
// scenes.hpp -- synthetic ground-truth scenes
//
// The ball phantom is a sphere in front of a flat screen, seen under
// orthographic projection along the optical axis. Pixel (r, c) (0-based) looks
// along the ray through lateral position
//
//   x = ((c + 0.5) - cols/2) * pitch,   y = ((r + 0.5) - rows/2) * pitch
//
// and takes the nearer of the sphere's front surface and the screen plane.
// ============================================================================
#pragma once

#include "spadcam/core.hpp"

namespace spadcam {

struct BallSceneSpec {
  double ball_radius{0.11};        // m
  double ball_center_x{0.0};       // m, lateral offsets from the optical axis
  double ball_center_y{0.0};
  double ball_center_z{0.50};      // m, distance from the sensor
  double screen_distance{0.72};    // m
  double field_height{0.44};       // m covered by the image rows; pitch = field_height / rows
  double ball_reflectivity{0.8};
  double screen_reflectivity{0.5};

  void validate() const;
};

SceneModel make_ball_scene(const GridShape& shape, const BallSceneSpec& spec = {});
/// Same, additionally checking that every depth fits the observation window.
SceneModel make_ball_scene(const GridShape& shape, const BallSceneSpec& spec, const SystemParams& params);

SceneModel make_plane_scene(const GridShape& shape, double depth, double reflectivity);

double pixel_pitch(const GridShape& shape, const BallSceneSpec& spec);

}  // namespace spadcam
