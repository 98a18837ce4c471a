// ============================================================================
// config.hpp -- run configuration, built-in profiles and JSON round trip
//
// A config file is a JSON object. "profile" selects the starting point
// ("table_one" or "desk"); every other key overrides that profile's value.
// dump_config writes the fully resolved form, which loads back to the same
// configuration, so it doubles as a replay manifest.
// ============================================================================
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spadcam/depth_pipeline.hpp"
#include "spadcam/forward_model.hpp"
#include "spadcam/intensity_pipeline.hpp"
#include "spadcam/scenes.hpp"

namespace spadcam {

struct SceneSource {
  std::string kind{"ball"};  // ball | plane | file
  BallSceneSpec ball;
  double plane_depth{0.72};
  double plane_reflectivity{0.5};
  std::filesystem::path path;
};

/// Photon-budget targets, applied by resolve_config when set.
struct CalibrationTargets {
  std::optional<double> raster_signal;     // signal photons/pixel of a raster scan -> pulse photons
  std::optional<double> diffraction_mean;  // photons/pixel of a diffraction-only capture -> epsilon
};

struct RunConfig {
  std::string profile{"table_one"};
  GridShape shape{95, 152};
  SystemParams system;
  IlluminationConfig illumination;
  double pulse_fwhm{80e-12};  // s
  std::optional<double> pulse_photons;
  CalibrationTargets calibration;
  SceneSource scene;
  IntensitySettings intensity;
  DepthSettings depth;
  std::uint64_t seed{1};
  bool simulate_deadtime{false};

  void validate() const;
};

RunConfig profile_config(std::string_view name);
std::vector<std::string> profile_names();

/// Parses a JSON document; unknown keys are rejected except a top-level
/// "run" object, which manifests use to record the command.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Deterministic JSON (sorted keys, full precision, no timestamps).
std::string dump_config(const RunConfig& config);

/// Applies a "dotted.key=value" override; the value is parsed as JSON and
/// falls back to a plain string.
void apply_override(RunConfig& config, std::string_view assignment);
/// Applies all assignments, then validates once; on error the config is unchanged.
void apply_overrides(RunConfig& config, const std::vector<std::string>& assignments);

SceneModel build_scene(const RunConfig& config);

/// Fills pulse_photons and epsilon from the calibration targets and clears
/// the targets, so the result replays without recalibrating.
RunConfig resolve_config(const RunConfig& config, const SceneModel& scene);

/// Requires a resolved config (pulse_photons set).
PulseModel build_pulse(const RunConfig& config);

}  // namespace spadcam
