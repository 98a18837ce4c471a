#include "spadcam/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "spadcam/parallel.hpp"

namespace spadcam {

// ============================================================================
// Illumination
// ============================================================================
namespace {

std::vector<double> window_kernel(const GridShape& shape, const IlluminationConfig& config) {
  config.validate(shape);
  const std::size_t n = shape.size(), theta = shape.rows, w = config.window;
  std::vector<double> h(n, config.epsilon);
  for (std::size_t i = 1; i <= n; ++i) {
    // i MOD theta as the smallest positive residue, in 1..theta.
    const std::size_t residue = (i - 1) % theta + 1;
    const std::size_t column = (i - residue) / theta + 1;
    if (residue <= w && column <= w) h[i - 1] = 1.0;
  }
  return h;
}

}  // namespace

IlluminationOperator::IlluminationOperator(const GridShape& shape, const IlluminationConfig& config)
    : IlluminationOperator(shape, config, window_kernel(shape, config)) {}

IlluminationOperator::IlluminationOperator(const GridShape& shape, const IlluminationConfig& config,
                                           std::vector<double> kernel)
    : shape_(shape), config_(config), kernel_(std::move(kernel)), fft_(shape.size()) {
  spectrum_ = circulant_spectrum(fft_, kernel_);
}

IlluminationOperator IlluminationOperator::leakage_only(const GridShape& shape, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in [0, 1)");
  IlluminationConfig cfg{1, epsilon};
  return IlluminationOperator(shape, cfg, std::vector<double>(shape.size(), epsilon));
}

double IlluminationOperator::entry(std::size_t k, std::size_t j) const {
  const std::size_t n = kernel_.size();
  return kernel_[(j + n - k % n) % n];
}

double IlluminationOperator::row_sum() const { return std::accumulate(kernel_.begin(), kernel_.end(), 0.0); }

IlluminationOperator build_illumination_kernel(const GridShape& shape, const IlluminationConfig& config) {
  return IlluminationOperator(shape, config);
}

std::vector<double> apply_H(const IlluminationOperator& op, std::span<const double> x) {
  if (x.size() != op.shape().size())
    throw ValidationError("apply_H: vector has " + std::to_string(x.size()) + " entries, grid has " +
                          std::to_string(op.shape().size()));
  return apply_circulant(op.fft(), op.spectrum(), x);
}

std::vector<double> apply_Ht(const IlluminationOperator& op, std::span<const double> x) {
  if (x.size() != op.shape().size()) throw ValidationError("apply_Ht: dimension mismatch");
  return apply_circulant_transpose(op.fft(), op.spectrum(), x);
}

// ============================================================================
// Pulse
// ============================================================================
PulseModel::PulseModel(std::vector<double> waveform) : waveform_(std::move(waveform)) {
  if (waveform_.empty()) throw ValidationError("pulse waveform is empty");
  for (double v : waveform_)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("pulse waveform must be finite and non-negative");
  total_ = std::accumulate(waveform_.begin(), waveform_.end(), 0.0);
  if (!(total_ > 0.0)) throw ValidationError("pulse waveform has no positive entry");
}

PulseModel PulseModel::gaussian(std::size_t bins, double fwhm_bins, double photons) {
  if (bins == 0) throw ValidationError("pulse needs at least one bin");
  if (!(fwhm_bins > 0.0) || !(photons > 0.0)) throw ValidationError("pulse width and energy must be positive");
  const double sigma = fwhm_bins / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double scale = 1.0 / (sigma * std::sqrt(2.0));
  std::vector<double> s(bins);
  for (std::size_t j = 0; j < bins; ++j) {
    // Signed offset from lag 0 on the circle.
    const double d = j <= bins / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(bins);
    s[j] = 0.5 * (std::erf((d + 0.5) * scale) - std::erf((d - 0.5) * scale));
  }
  const double total = std::accumulate(s.begin(), s.end(), 0.0);
  for (double& v : s) v *= photons / total;
  return PulseModel(std::move(s));
}

double PulseModel::entry(std::size_t r, std::size_t c) const {
  const std::size_t m = waveform_.size();
  return waveform_[(c + m - r % m) % m];
}

std::vector<double> PulseModel::shifted(std::size_t lag) const {
  const std::size_t m = waveform_.size();
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) out[(j + lag) % m] = waveform_[j];
  return out;
}

// ============================================================================
// Depth
// ============================================================================
DepthOperator build_depth_operator(const SceneModel& scene, const SystemParams& params) {
  scene.validate();
  DepthOperator d{scene.shape, params.bins, std::vector<std::size_t>(scene.shape.size())};
  for (std::size_t i = 0; i < d.lag.size(); ++i) {
    const double lag = std::floor(2.0 * scene.depth[i] / (kSpeedOfLight * params.bin_width) + 0.5);
    if (!(lag >= 0.0) || lag > static_cast<double>(params.bins - 1))
      throw ValidationError("depth " + std::to_string(scene.depth[i]) + " m at pixel " + std::to_string(i + 1) +
                            " maps outside time-bins 1.." + std::to_string(params.bins));
    d.lag[i] = static_cast<std::size_t>(lag);
  }
  return d;
}

// ============================================================================
// Observations
// ============================================================================
Matrix<double> expected_histograms(const SceneModel& scene, const IlluminationOperator& op,
                                   const PulseModel& pulse, const SystemParams& params) {
  params.validate();
  scene.validate();
  if (!(op.shape() == scene.shape)) throw ValidationError("illumination operator and scene grids differ");
  if (pulse.bins() != params.bins) throw ValidationError("pulse length differs from the number of time-bins");
  const DepthOperator depth = build_depth_operator(scene, params);

  const std::size_t n = scene.shape.size(), m = params.bins;
  const auto& s = pulse.waveform();

  // Time-slices of diag(kappa) * delta(z) * eta*S, one row per bin.
  Matrix<double> slices(m, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = params.eta * scene.reflectivity[i];
    if (a == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) slices((j + depth.lag[i]) % m, i) = a * s[j];
  }

  const double nr = params.repetitions;
  const double bg = params.background_per_bin();
  Matrix<double> lambda(n, m, 0.0);
  parallel_for(m, [&](std::size_t j) {
    auto row = slices.row(j);
    const bool empty = std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; });
    if (empty) {
      for (std::size_t i = 0; i < n; ++i) lambda(i, j) = nr * bg;
      return;
    }
    const std::vector<double> lit = apply_H(op, row);
    // The FFT leaves ~1e-16 negative residue where the true value is 0.
    for (std::size_t i = 0; i < n; ++i) lambda(i, j) = nr * (std::max(lit[i], 0.0) + bg);
  });
  return lambda;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

HistogramCube sample_poisson(const Matrix<double>& expected, const GridShape& shape, std::uint64_t seed) {
  if (expected.rows() != shape.size()) throw ValidationError("expected matrix rows differ from the pixel count");
  for (std::size_t k = 0; k < expected.data().size(); ++k) {
    const double v = expected.data()[k];
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError("negative or non-finite expectation at pixel " + std::to_string(k / expected.cols() + 1) +
                            ", bin " + std::to_string(k % expected.cols() + 1));
    if (v > 4.0e9) throw ValidationError("expectation exceeds the 32-bit count range");
  }
  HistogramCube cube(shape, expected.cols());
  parallel_for(shape.size(), [&](std::size_t i) {
    std::mt19937_64 rng(stream_seed(seed, i));
    auto in = expected.row(i);
    auto out = cube.counts.row(i);
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (in[j] == 0.0) continue;
      std::poisson_distribution<std::int64_t> draw(in[j]);
      out[j] = static_cast<std::uint32_t>(draw(rng));
    }
  });
  return cube;
}

std::vector<std::uint32_t> simulate_deadtime_pixel(std::span<const double> rate_per_bin,
                                                   std::uint64_t repetitions, double bin_width,
                                                   double deadtime, double repetition_period,
                                                   std::uint64_t seed) {
  const std::size_t m = rate_per_bin.size();
  std::vector<std::uint32_t> hist(m, 0);
  std::vector<double> cdf(m);
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (!(rate_per_bin[j] >= 0.0)) throw ValidationError("negative photon rate in deadtime simulation");
    total += rate_per_bin[j];
    cdf[j] = total;
  }
  if (total == 0.0) return hist;

  std::mt19937_64 rng(seed);
  std::poisson_distribution<std::int64_t> arrivals(total);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, std::size_t>> events;  // (time within repetition, bin)
  double ready = -1.0;                                 // detector armed from this absolute time on

  for (std::uint64_t r = 0; r < repetitions; ++r) {
    const std::int64_t k = arrivals(rng);
    if (k == 0) continue;
    events.clear();
    for (std::int64_t e = 0; e < k; ++e) {
      const double u = unit(rng) * total;
      std::size_t bin = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      bin = std::min(bin, m - 1);
      events.emplace_back((static_cast<double>(bin) + unit(rng)) * bin_width, bin);
    }
    std::sort(events.begin(), events.end());
    const double start = static_cast<double>(r) * repetition_period;
    for (const auto& [t, bin] : events) {
      const double when = start + t;
      if (when < ready) continue;  // blind; does not extend the deadtime
      ++hist[bin];
      ready = when + deadtime;
    }
  }
  return hist;
}

HistogramCube sample_with_deadtime(const SceneModel& scene, const IlluminationOperator& op,
                                   const PulseModel& pulse, const SystemParams& params, std::uint64_t seed) {
  if (!params.deadtime) throw ValidationError("deadtime simulation requires a deadtime parameter");
  const Matrix<double> lambda = expected_histograms(scene, op, pulse, params);
  const double nr = params.repetitions;
  const auto reps = static_cast<std::uint64_t>(std::llround(nr));
  HistogramCube cube(scene.shape, params.bins);
  if (reps == 0) return cube;
  parallel_for(scene.shape.size(), [&](std::size_t i) {
    std::vector<double> rate(lambda.row(i).begin(), lambda.row(i).end());
    for (double& v : rate) v /= nr;
    const auto hist = simulate_deadtime_pixel(rate, reps, params.bin_width, *params.deadtime,
                                              params.repetition_period, stream_seed(seed, i));
    std::copy(hist.begin(), hist.end(), cube.counts.row(i).begin());
  });
  return cube;
}

std::vector<std::uint64_t> intensity_observation(const HistogramCube& cube) {
  std::vector<std::uint64_t> v(cube.counts.rows(), 0);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::uint32_t c : cube.counts.row(i)) v[i] += c;
  return v;
}

}  // namespace spadcam
