// ============================================================================
// depth_pipeline.hpp -- depth recovery from overlap-scan histograms
//
//   1. Spatial deconvolution: every time-slice R_j (column j of the cube) is
//      deconvolved independently,
//        C_j = argmin 1/2||H c - R_j||^2 + mu ||grad c||_1,  c >= 0.
//   2. Each pixel's deconvolved histogram goes through an N-th order running
//      median (edges replicated).
//   3. The time of flight is the lag maximizing the circular cross-correlation
//      of that histogram with the pulse, sum_a C[a] s[a - b]; ties go to the
//      smallest lag, depth = (c/2) * Delta * lag.
// ============================================================================
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "spadcam/admm.hpp"
#include "spadcam/forward_model.hpp"

namespace spadcam {

/// C-bar: n x m, row i is pixel i's deconvolved histogram.
struct DeconvolvedCube {
  GridShape shape;
  std::size_t bins{0};
  Matrix<double> values;
};

struct DepthResult {
  static constexpr std::int64_t kInvalidBin = -1;

  std::vector<double> depth;          // meters; NaN where invalid
  std::vector<std::int64_t> tof_bins;  // 0..m-1, or kInvalidBin
  std::vector<SolveReport> slice_reports;

  bool valid(std::size_t i) const { return tof_bins[i] != kInvalidBin; }
};

struct DepthSettings {
  AdmmSettings admm;
  double mu{0.05};
  std::size_t median_order{5};
};

/// Slices are solved in parallel; the result does not depend on the order.
DeconvolvedCube deconvolve_slices(const HistogramCube& cube, const IlluminationOperator& op, double mu,
                                  const AdmmSettings& settings, std::vector<SolveReport>* reports = nullptr);

std::vector<double> median_filter(std::span<const double> row, std::size_t order);
DeconvolvedCube median_filter_rows(const DeconvolvedCube& cube, std::size_t order);

/// Pixels whose histogram is identically zero are marked invalid.
DepthResult tof_by_crosscorrelation(const DeconvolvedCube& filtered, const PulseModel& pulse, double bin_width);

DepthResult recover_depth(const HistogramCube& cube, const IlluminationOperator& op, const PulseModel& pulse,
                          double bin_width, const DepthSettings& settings);

/// pixel,row,col,bin,depth_m (bin empty when invalid).
void write_depth_csv(const std::filesystem::path& path, const DepthResult& result, const GridShape& shape);
/// x y z per valid pixel, with lateral coordinates in pixel units scaled by `pitch`.
void write_point_cloud(const std::filesystem::path& path, const DepthResult& result, const GridShape& shape,
                       double pitch);

}  // namespace spadcam
