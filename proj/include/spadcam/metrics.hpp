// ============================================================================
// metrics.hpp -- image and depth quality measures, photon statistics
// ============================================================================
#pragma once

#include <limits>
#include <span>
#include <vector>

#include "spadcam/depth_pipeline.hpp"
#include "spadcam/forward_model.hpp"

namespace spadcam {

/// Returned by psnr when the images are identical.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) in dB.
double psnr(std::span<const double> a, std::span<const double> b, double peak);

/// RMS of est - truth over pixels where mask is set.
double depth_rmse(std::span<const double> est, std::span<const double> truth, const std::vector<bool>& mask);
/// An invalid (NaN) depth inside the mask makes the result NaN.
double depth_rmse(const DepthResult& est, const SceneModel& truth, const std::vector<bool>& mask);

struct PhotonStatistics {
  double mean{0.0};
  double stddev{0.0};  // population
};

/// Mean and standard deviation of per-pixel total counts.
PhotonStatistics photon_statistics(const HistogramCube& cube);

/// Expected signal photons reflected by each pixel's own surface over the
/// whole scan: N_r * eta * kappa_i * sum(s) * (column sum of H at i).
std::vector<double> signal_photons(const SceneModel& scene, const IlluminationOperator& op, const PulseModel& pulse,
                                   const SystemParams& params);

std::vector<bool> threshold_mask(std::span<const double> values, double threshold);

/// Reflectivity estimate from recovered intensity: alpha / (N_r * eta * sum(s)).
std::vector<double> reflectivity_estimate(std::span<const double> alpha, const PulseModel& pulse,
                                          const SystemParams& params);

}  // namespace spadcam
