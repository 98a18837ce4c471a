#include "spadcam/metrics.hpp"

#include <cmath>

namespace spadcam {

double psnr(std::span<const double> a, std::span<const double> b, double peak) {
  if (a.size() != b.size()) throw ValidationError("psnr: image sizes differ");
  if (a.empty()) throw ValidationError("psnr: empty images");
  if (!(peak > 0.0)) throw ValidationError("psnr: peak must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.size());
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

double depth_rmse(std::span<const double> est, std::span<const double> truth, const std::vector<bool>& mask) {
  if (est.size() != truth.size() || mask.size() != est.size()) throw ValidationError("depth_rmse: sizes differ");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (!mask[i]) continue;
    const double d = est[i] - truth[i];
    acc += d * d;
    ++count;
  }
  if (count == 0) throw ValidationError("depth_rmse: empty mask");
  return std::sqrt(acc / static_cast<double>(count));
}

double depth_rmse(const DepthResult& est, const SceneModel& truth, const std::vector<bool>& mask) {
  return depth_rmse(est.depth, truth.depth, mask);
}

PhotonStatistics photon_statistics(const HistogramCube& cube) {
  const auto v = intensity_observation(cube);
  if (v.empty()) return {};
  double mean = 0.0;
  for (auto x : v) mean += static_cast<double>(x);
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (auto x : v) {
    const double d = static_cast<double>(x) - mean;
    var += d * d;
  }
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

std::vector<double> signal_photons(const SceneModel& scene, const IlluminationOperator& op, const PulseModel& pulse,
                                   const SystemParams& params) {
  scene.validate();
  if (!(scene.shape == op.shape())) throw ValidationError("scene and illumination grids differ");
  // H is circulant, so every column sums to the kernel total.
  const double gain = params.repetitions * params.eta * pulse.total() * op.row_sum();
  std::vector<double> out(scene.shape.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gain * scene.reflectivity[i];
  return out;
}

std::vector<bool> threshold_mask(std::span<const double> values, double threshold) {
  std::vector<bool> m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m[i] = values[i] >= threshold;
  return m;
}

std::vector<double> reflectivity_estimate(std::span<const double> alpha, const PulseModel& pulse,
                                          const SystemParams& params) {
  const double scale = params.repetitions * params.eta * pulse.total();
  if (!(scale > 0.0)) throw ValidationError("reflectivity estimate needs a positive photon scale");
  std::vector<double> out(alpha.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha[i] / scale;
  return out;
}

}  // namespace spadcam
