#include "spadcam/calibration.hpp"

#include <cmath>
#include <numeric>

namespace spadcam {

double expected_noise_mean(const SystemParams& params) {
  return params.repetitions * static_cast<double>(params.bins) * params.background_per_bin();
}

double expected_diffraction_mean(const SceneModel& scene, double pulse_photons, double epsilon,
                                 const SystemParams& params) {
  scene.validate();
  const double total = std::accumulate(scene.reflectivity.begin(), scene.reflectivity.end(), 0.0);
  return params.repetitions * params.eta * pulse_photons * epsilon * total + expected_noise_mean(params);
}

double calibrate_pulse_photons(const SceneModel& scene, const SystemParams& params, double target) {
  scene.validate();
  params.validate();
  if (!(target > 0.0) || !std::isfinite(target)) throw ValidationError("signal target must be positive");
  const double total = std::accumulate(scene.reflectivity.begin(), scene.reflectivity.end(), 0.0);
  const double mean = total / static_cast<double>(scene.shape.size());
  if (!(mean > 0.0)) throw ValidationError("cannot calibrate pulse energy on a black scene");
  return target / (params.repetitions * params.eta * mean);
}

double calibrate_epsilon(const SceneModel& scene, double pulse_photons, const SystemParams& params, double target) {
  scene.validate();
  params.validate();
  if (!(pulse_photons > 0.0)) throw ValidationError("pulse photons must be positive");
  const double noise = expected_noise_mean(params);
  if (!(target > noise)) throw ValidationError("diffraction target does not exceed the noise floor");
  const double per_eps = expected_diffraction_mean(scene, pulse_photons, 1.0, params) - noise;
  if (!(per_eps > 0.0)) throw ValidationError("cannot calibrate leakage on a black scene");
  const double eps = (target - noise) / per_eps;
  if (eps > 1.0) throw ValidationError("diffraction target needs epsilon > 1");
  return eps;
}

}  // namespace spadcam
