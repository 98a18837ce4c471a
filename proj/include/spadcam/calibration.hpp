// ============================================================================
// calibration.hpp -- closed-form photon-budget calibration
//
// Expected per-pixel totals are linear in the pulse energy and in epsilon, so
// both are solved directly:
//
//   raster signal       N_r * eta * P * mean(kappa)
//   diffraction-only    N_r * eta * P * epsilon * sum(kappa) + noise
//   noise               N_r * m * (eta*n_a + n_d) * Delta
//
// P is the pulse's photons per repetition for unit reflectivity.
// ============================================================================
#pragma once

#include "spadcam/core.hpp"

namespace spadcam {

/// Mean background photons per pixel over a full histogram.
double expected_noise_mean(const SystemParams& params);

/// Mean per-pixel total of a diffraction-only capture (all mirrors off).
double expected_diffraction_mean(const SceneModel& scene, double pulse_photons, double epsilon,
                                 const SystemParams& params);

/// P such that a raster scan (w=1, epsilon=0) collects `target` signal
/// photons per pixel on average.
double calibrate_pulse_photons(const SceneModel& scene, const SystemParams& params, double target);

/// epsilon such that a diffraction-only capture averages `target` photons
/// per pixel, noise included. Throws when noise alone exceeds the target.
double calibrate_epsilon(const SceneModel& scene, double pulse_photons, const SystemParams& params, double target);

}  // namespace spadcam
