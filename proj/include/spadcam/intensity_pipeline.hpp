// ============================================================================
// intensity_pipeline.hpp -- intensity recovery from overlap-scan counts
//
//   1. b0     = f(v), the Anscombe transform of per-pixel totals
//   2. b_opt  = argmin 1/2||b - b0||^2 + mu ||D b||_1,      b >= 2 sqrt(3/8)
//   3. b_star = exact unbiased inverse of b_opt (table lookup)
//   4. alpha  = argmin 1/2||H a - b_star||^2 + lambda ||D a||_1,  a >= 0
//
// Steps 2 and 4 run the ADMM solver with A = I and A = H respectively.
// ============================================================================
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spadcam/admm.hpp"
#include "spadcam/forward_model.hpp"
#include "spadcam/variance_transform.hpp"

namespace spadcam {

struct IntensityResult {
  std::vector<std::uint64_t> counts;  // v
  std::vector<double> stabilized;     // f(v)
  std::vector<double> b_opt;
  std::vector<double> b_star;
  std::vector<double> alpha_opt;
  SolveReport denoise_report;
  SolveReport deconvolve_report;
};

/// Stage overrides; each stage falls back to `shared` when unset.
struct IntensitySettings {
  AdmmSettings shared;
  std::optional<AdmmSettings> denoise;
  std::optional<AdmmSettings> deconvolve;
  double mu{0.5};
  double lambda{0.05};
};

SolveResult denoise_stabilized(std::span<const std::uint64_t> v, const DerivativeStack& stack, double mu,
                               const AdmmSettings& settings);
/// Same, starting from an already stabilized vector f(v).
SolveResult denoise_stabilized(std::span<const double> stabilized, const DerivativeStack& stack, double mu,
                               const AdmmSettings& settings);

SolveResult deconvolve(std::span<const double> b_star, const IlluminationOperator& op, const DerivativeStack& stack,
                       double lambda, const AdmmSettings& settings);

IntensityResult recover_intensity(const HistogramCube& cube, const IlluminationOperator& op,
                                  const DerivativeStack& stack, const InverseTable& table,
                                  const IntensitySettings& settings);

/// Inverse table covering the largest stabilized value a cube can produce.
InverseTable inverse_table_for(const HistogramCube& cube, std::size_t resolution = 4096);

}  // namespace spadcam
