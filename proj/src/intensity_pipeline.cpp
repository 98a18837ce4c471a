#include "spadcam/intensity_pipeline.hpp"

#include <algorithm>
#include <string>

namespace spadcam {

SolveResult denoise_stabilized(std::span<const double> stabilized, const DerivativeStack& stack, double mu,
                               const AdmmSettings& settings) {
  AdmmSettings s = settings;
  s.reg_weight = mu;
  return solve_generic(std::nullopt, stabilized, stack, RegularizerMode::full, Constraint::anscombe_floor, s);
}

SolveResult denoise_stabilized(std::span<const std::uint64_t> v, const DerivativeStack& stack, double mu,
                               const AdmmSettings& settings) {
  const std::vector<double> b0 = anscombe(v);
  return denoise_stabilized(std::span<const double>(b0), stack, mu, settings);
}

SolveResult deconvolve(std::span<const double> b_star, const IlluminationOperator& op, const DerivativeStack& stack,
                       double lambda, const AdmmSettings& settings) {
  for (std::size_t i = 0; i < b_star.size(); ++i)
    if (!(b_star[i] >= 0.0)) throw ValidationError("deconvolve: negative input at pixel " + std::to_string(i + 1));
  AdmmSettings s = settings;
  s.reg_weight = lambda;
  return solve_generic(op, b_star, stack, RegularizerMode::full, Constraint::nonnegative, s);
}

InverseTable inverse_table_for(const HistogramCube& cube, std::size_t resolution) {
  std::uint64_t peak = 0;
  for (std::uint64_t v : intensity_observation(cube)) peak = std::max(peak, v);
  return InverseTable(std::max(1000.0, 2.0 * static_cast<double>(peak)), resolution);
}

IntensityResult recover_intensity(const HistogramCube& cube, const IlluminationOperator& op,
                                  const DerivativeStack& stack, const InverseTable& table,
                                  const IntensitySettings& settings) {
  if (!(cube.shape == op.shape()) || !(cube.shape == stack.shape()))
    throw ValidationError("cube, illumination operator and derivative stack grids differ");

  IntensityResult r;
  r.counts = intensity_observation(cube);
  r.stabilized = anscombe(r.counts);

  SolveResult den = denoise_stabilized(std::span<const double>(r.stabilized), stack, settings.mu,
                                       settings.denoise.value_or(settings.shared));
  r.b_opt = std::move(den.solution);
  r.denoise_report = std::move(den.report);

  r.b_star = ml_inverse(table, r.b_opt);

  SolveResult dec = deconvolve(r.b_star, op, stack, settings.lambda, settings.deconvolve.value_or(settings.shared));
  r.alpha_opt = std::move(dec.solution);
  r.deconvolve_report = std::move(dec.report);
  return r;
}

}  // namespace spadcam
