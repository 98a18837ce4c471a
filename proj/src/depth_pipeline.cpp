#include "spadcam/depth_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "spadcam/parallel.hpp"
#include "spadcam/simd/kernels.hpp"

namespace spadcam {

DeconvolvedCube deconvolve_slices(const HistogramCube& cube, const IlluminationOperator& op, double mu,
                                  const AdmmSettings& settings, std::vector<SolveReport>* reports) {
  if (!(cube.shape == op.shape())) throw ValidationError("cube and illumination operator grids differ");
  AdmmSettings s = settings;
  s.reg_weight = mu;
  const AdmmSolver solver(DerivativeStack(cube.shape), op, RegularizerMode::gradient_only,
                          Constraint::nonnegative, s);

  const std::size_t n = cube.shape.size(), m = cube.bins;
  DeconvolvedCube out{cube.shape, m, Matrix<double>(n, m, 0.0)};
  std::vector<SolveReport> local(m);
  parallel_for(m, [&](std::size_t j) {
    std::vector<double> slice(n);
    for (std::size_t i = 0; i < n; ++i) slice[i] = cube.counts(i, j);
    SolveResult r;
    try {
      r = solver.solve(slice);
    } catch (const SolverError& e) {
      throw SolverError("time-slice " + std::to_string(j + 1) + ": " + e.what());
    }
    for (std::size_t i = 0; i < n; ++i) out.values(i, j) = r.solution[i];
    local[j] = std::move(r.report);
  });
  if (reports) *reports = std::move(local);
  return out;
}

std::vector<double> median_filter(std::span<const double> row, std::size_t order) {
  if (order == 0 || order % 2 == 0) throw ValidationError("median filter order must be a positive odd number");
  const std::size_t m = row.size();
  if (order > m) throw ValidationError("median filter order exceeds the histogram length");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(order / 2);
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(m) - 1;
  std::vector<double> out(m), window(order);
  for (std::ptrdiff_t j = 0; j <= last; ++j) {
    for (std::ptrdiff_t d = -half; d <= half; ++d)
      window[static_cast<std::size_t>(d + half)] = row[static_cast<std::size_t>(std::clamp(j + d, std::ptrdiff_t{0}, last))];
    std::nth_element(window.begin(), window.begin() + half, window.end());
    out[static_cast<std::size_t>(j)] = window[static_cast<std::size_t>(half)];
  }
  return out;
}

DeconvolvedCube median_filter_rows(const DeconvolvedCube& cube, std::size_t order) {
  DeconvolvedCube out{cube.shape, cube.bins, Matrix<double>(cube.values.rows(), cube.values.cols())};
  // Validate once up front so the parallel loop cannot throw.
  (void)median_filter(cube.values.row(0), order);
  parallel_for(cube.values.rows(), [&](std::size_t i) {
    const auto f = median_filter(cube.values.row(i), order);
    std::copy(f.begin(), f.end(), out.values.row(i).begin());
  });
  return out;
}

DepthResult tof_by_crosscorrelation(const DeconvolvedCube& filtered, const PulseModel& pulse, double bin_width) {
  const std::size_t n = filtered.values.rows(), m = filtered.values.cols();
  if (pulse.bins() != m) throw ValidationError("pulse length differs from the histogram length");
  if (!(bin_width > 0.0)) throw ValidationError("bin width must be positive");

  const RealFft fft(m);
  const Spectrum pulse_spec = fft.forward(pulse.waveform());
  const double bin_depth = 0.5 * kSpeedOfLight * bin_width;

  DepthResult r;
  r.depth.assign(n, std::numeric_limits<double>::quiet_NaN());
  r.tof_bins.assign(n, DepthResult::kInvalidBin);
  parallel_for(n, [&](std::size_t i) {
    auto row = filtered.values.row(i);
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) return;
    // sum_a C[a] s[a-b] over b is the inverse DFT of C_hat * conj(S_hat).
    Spectrum spec = fft.forward(row);
    auto* p = reinterpret_cast<double*>(spec.data());
    simd::kernels().spectral_multiply(p, reinterpret_cast<const double*>(pulse_spec.data()), p, spec.size(), true);
    std::vector<double> corr(m);
    fft.inverse(spec, corr);

    const double peak = *std::max_element(corr.begin(), corr.end());
    if (!(peak > 0.0)) return;
    // Values equal up to transform round-off count as ties.
    const double tie = peak * (1.0 - 1e-12);
    std::size_t best = 0;
    while (corr[best] < tie) ++best;
    r.tof_bins[i] = static_cast<std::int64_t>(best);
    r.depth[i] = bin_depth * static_cast<double>(best);
  });
  return r;
}

DepthResult recover_depth(const HistogramCube& cube, const IlluminationOperator& op, const PulseModel& pulse,
                          double bin_width, const DepthSettings& settings) {
  std::vector<SolveReport> reports;
  const DeconvolvedCube c = deconvolve_slices(cube, op, settings.mu, settings.admm, &reports);
  const DeconvolvedCube f = median_filter_rows(c, settings.median_order);
  DepthResult r = tof_by_crosscorrelation(f, pulse, bin_width);
  r.slice_reports = std::move(reports);
  return r;
}

void write_depth_csv(const std::filesystem::path& path, const DepthResult& result, const GridShape& shape) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "pixel,row,col,bin,depth_m\n" << std::setprecision(17);
  for (std::size_t i = 0; i < result.depth.size(); ++i) {
    const RowCol rc = pixel_to_rowcol(i + 1, shape);
    os << i + 1 << ',' << rc.row << ',' << rc.col << ',';
    if (result.valid(i)) os << result.tof_bins[i] << ',' << result.depth[i];
    else os << ',';
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

void write_point_cloud(const std::filesystem::path& path, const DepthResult& result, const GridShape& shape,
                       double pitch) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << std::setprecision(9);
  for (std::size_t i = 0; i < result.depth.size(); ++i) {
    if (!result.valid(i)) continue;
    const RowCol rc = pixel_to_rowcol(i + 1, shape);
    os << static_cast<double>(rc.col - 1) * pitch << ' ' << -static_cast<double>(rc.row - 1) * pitch << ' '
       << result.depth[i] << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace spadcam
