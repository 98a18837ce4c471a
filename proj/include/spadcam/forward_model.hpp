// ============================================================================
// forward_model.hpp -- overlap-scan illumination, pulse and depth operators,
// noiseless observations and photon-count sampling
//
// Observation model (per measurement, N_r pulses):
//
//   Lambda = N_r * ( H * diag(kappa) * delta(z) * (eta * S) + b )
//
// H is the n x n circulant of the w x w illumination window with off-state
// leakage epsilon, delta(z) puts each pixel at its time-of-flight bin, S is the
// m x m circulant of the pulse waveform and b = (eta*n_a + n_d)*Delta is the
// per-bin background. Leaked light goes through S as well: it is still pulsed
// laser light, only spatially misplaced.
//
// H wraps around periodically on the column-stacked vector. Physically the DMD
// window is clipped at the image border; the circulant model trades that edge
// behavior for exact frequency-domain solves.
// ============================================================================
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spadcam/core.hpp"
#include "spadcam/fft.hpp"

namespace spadcam {

// ============================================================================
// Illumination
// ============================================================================
class IlluminationOperator {
 public:
  /// Window kernel: h_i = 1 inside the w x w window anchored at pixel 1,
  /// epsilon elsewhere.
  IlluminationOperator(const GridShape& shape, const IlluminationConfig& config);

  /// All mirrors off: every tap is epsilon. Used for diffraction-only captures.
  static IlluminationOperator leakage_only(const GridShape& shape, double epsilon);

  const GridShape& shape() const noexcept { return shape_; }
  const IlluminationConfig& config() const noexcept { return config_; }
  /// First row (h_1..h_n) of H, 0-based storage.
  const std::vector<double>& kernel() const noexcept { return kernel_; }
  const Spectrum& spectrum() const noexcept { return spectrum_; }
  const RealFft& fft() const noexcept { return fft_; }

  /// Dense entry H[k][j] (0-based) = h[(j - k) mod n].
  double entry(std::size_t k, std::size_t j) const;
  double row_sum() const;

 private:
  IlluminationOperator(const GridShape& shape, const IlluminationConfig& config, std::vector<double> kernel);

  GridShape shape_;
  IlluminationConfig config_;
  std::vector<double> kernel_;
  RealFft fft_;
  Spectrum spectrum_;
};

IlluminationOperator build_illumination_kernel(const GridShape& shape, const IlluminationConfig& config);

/// H x by cyclic convolution in the frequency domain.
std::vector<double> apply_H(const IlluminationOperator& op, std::span<const double> x);
/// H^T x.
std::vector<double> apply_Ht(const IlluminationOperator& op, std::span<const double> x);

// ============================================================================
// Pulse
// ============================================================================

/// Discretized pulse waveform s, photons per bin per pulse (for kappa = 1,
/// before quantum efficiency). Lag 0 is the pulse reference time.
class PulseModel {
 public:
  explicit PulseModel(std::vector<double> waveform);

  /// Gaussian pulse of the given FWHM (in bins) centered on lag 0 and wrapped
  /// circularly, integrated per bin and scaled to `photons` in total.
  static PulseModel gaussian(std::size_t bins, double fwhm_bins, double photons);

  std::size_t bins() const noexcept { return waveform_.size(); }
  const std::vector<double>& waveform() const noexcept { return waveform_; }
  double total() const noexcept { return total_; }

  /// Entry S[r][c] (0-based) = s[(c - r) mod m].
  double entry(std::size_t r, std::size_t c) const;
  /// The waveform circularly delayed by `lag` bins.
  std::vector<double> shifted(std::size_t lag) const;

 private:
  std::vector<double> waveform_;
  double total_{0.0};
};

// ============================================================================
// Depth
// ============================================================================

/// delta(z): each pixel sits in exactly one time-bin. `lag[i]` is the 0-based
/// column of pixel i's single 1, equal to its time of flight in bins.
struct DepthOperator {
  GridShape shape;
  std::size_t bins{0};
  std::vector<std::size_t> lag;

  /// Column of pixel i in 1-based bin numbering (lag + 1).
  std::size_t bin_index(std::size_t i) const { return lag[i] + 1; }
  double entry(std::size_t i, std::size_t j) const { return lag[i] == j ? 1.0 : 0.0; }
};

/// Quantizes 2z/(c*Delta) with round-half-up. Throws naming the first pixel
/// whose lag falls outside [0, m-1].
DepthOperator build_depth_operator(const SceneModel& scene, const SystemParams& params);

// ============================================================================
// Observations
// ============================================================================

/// Photon counts R: row i is pixel i's TCSPC histogram.
struct HistogramCube {
  GridShape shape;
  std::size_t bins{0};
  Matrix<std::uint32_t> counts;

  HistogramCube() = default;
  HistogramCube(const GridShape& s, std::size_t m) : shape(s), bins(m), counts(s.size(), m, 0u) {}

  friend bool operator==(const HistogramCube&, const HistogramCube&) = default;
};

/// Noiseless expected counts Lambda (n x m).
Matrix<double> expected_histograms(const SceneModel& scene, const IlluminationOperator& op,
                                   const PulseModel& pulse, const SystemParams& params);

/// counts[i][j] ~ Poisson(expected[i][j]); pixel i draws from its own stream
/// seeded by (seed, i).
HistogramCube sample_poisson(const Matrix<double>& expected, const GridShape& shape, std::uint64_t seed);

/// Event-level simulation with a non-extensible deadtime carried across pulse
/// repetitions. N_r pulses are simulated explicitly, so callers thin
/// params.repetitions for large grids.
HistogramCube sample_with_deadtime(const SceneModel& scene, const IlluminationOperator& op,
                                   const PulseModel& pulse, const SystemParams& params, std::uint64_t seed);

/// Same simulation for one pixel given its per-repetition expected counts per
/// bin (Lambda / N_r).
std::vector<std::uint32_t> simulate_deadtime_pixel(std::span<const double> rate_per_bin,
                                                   std::uint64_t repetitions, double bin_width,
                                                   double deadtime, double repetition_period,
                                                   std::uint64_t seed);

/// v[i] = total photon count of pixel i.
std::vector<std::uint64_t> intensity_observation(const HistogramCube& cube);

/// Seed for pixel/stream `index` derived from a run seed (splitmix64).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace spadcam
