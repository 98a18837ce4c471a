#include "spadcam/variance_transform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "spadcam/core.hpp"
#include "spadcam/simd/kernels.hpp"

namespace spadcam {

double anscombe(double v) {
  if (!(v >= 0.0)) throw ValidationError("anscombe: negative or NaN input");
  return 2.0 * std::sqrt(v + 0.375);
}

std::vector<double> anscombe(std::span<const double> v) {
  for (double x : v)
    if (!(x >= 0.0)) throw ValidationError("anscombe: negative or NaN input");
  std::vector<double> out(v.size());
  simd::kernels().anscombe(v.data(), out.data(), v.size());
  return out;
}

std::vector<double> anscombe(std::span<const std::uint64_t> v) {
  std::vector<double> as(v.begin(), v.end());
  return anscombe(std::span<const double>(as));
}

namespace {

// Sums pmf(k; lambda) * g(k) outward from the mode until terms vanish.
template <typename G>
double poisson_series(double lambda, G g) {
  if (lambda == 0.0) return g(0.0);
  const double log_lambda = std::log(lambda);
  auto pmf = [&](double k) { return std::exp(k * log_lambda - lambda - std::lgamma(k + 1.0)); };
  const double mode = std::floor(lambda);
  constexpr double kCut = 1e-17;

  double up = 0.0;
  for (double k = mode;; k += 1.0) {
    const double p = pmf(k);
    up += p * g(k);
    if (p < kCut && k > lambda) break;
  }
  double down = 0.0;
  for (double k = mode - 1.0; k >= 0.0; k -= 1.0) {
    const double p = pmf(k);
    down += p * g(k);
    if (p < kCut) break;
  }
  return up + down;
}

}  // namespace

double anscombe_expectation(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("rate must be finite and non-negative");
  return poisson_series(lambda, [](double k) { return 2.0 * std::sqrt(k + 0.375); });
}

double anscombe_expectation_slope(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("rate must be finite and non-negative");
  // f(k+1) - f(k) without cancellation.
  return poisson_series(lambda, [](double k) { return 2.0 / (std::sqrt(k + 1.375) + std::sqrt(k + 0.375)); });
}

double asymptotic_unbiased_inverse(double b) {
  const double r = std::sqrt(1.5);
  return 0.25 * b * b + 0.25 * r / b - 1.375 / (b * b) + 0.625 * r / (b * b * b) - 0.125;
}

InverseTable::InverseTable(double lambda_max, std::size_t resolution) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) throw ValidationError("lambda_max must be positive");
  if (resolution < 2) throw ValidationError("inverse table needs at least two knots");
  const double lo = std::min(1e-3, lambda_max / 10.0);
  const double ratio = std::log(lambda_max / lo) / static_cast<double>(resolution - 1);

  rates_.reserve(resolution + 1);
  rates_.push_back(0.0);
  for (std::size_t k = 0; k < resolution; ++k) rates_.push_back(lo * std::exp(ratio * static_cast<double>(k)));
  rates_.back() = lambda_max;

  expectations_.resize(rates_.size());
  slopes_.resize(rates_.size());
  for (std::size_t k = 0; k < rates_.size(); ++k) {
    expectations_[k] = anscombe_expectation(rates_[k]);
    slopes_[k] = 1.0 / anscombe_expectation_slope(rates_[k]);
    if (k > 0 && !(expectations_[k] > expectations_[k - 1]))
      throw SolverError("Anscombe expectation not strictly increasing near lambda = " + std::to_string(rates_[k]));
  }

  // Fritsch-Carlson: keep the Hermite interpolant monotone on every interval.
  for (std::size_t k = 0; k + 1 < rates_.size(); ++k) {
    const double secant = (rates_[k + 1] - rates_[k]) / (expectations_[k + 1] - expectations_[k]);
    const double a = slopes_[k] / secant, c = slopes_[k + 1] / secant;
    const double norm = a * a + c * c;
    if (norm > 9.0) {
      const double tau = 3.0 / std::sqrt(norm);
      slopes_[k] = tau * a * secant;
      slopes_[k + 1] = tau * c * secant;
    }
  }
}

double InverseTable::invert(double b) const {
  if (!std::isfinite(b)) throw ValidationError("ml_inverse: non-finite input");
  if (b <= expectations_.front()) return 0.0;
  if (b >= expectations_.back()) {
    // Beyond the table: closed form, shifted to meet the last knot.
    const double top = expectations_.back();
    return rates_.back() + asymptotic_unbiased_inverse(b) - asymptotic_unbiased_inverse(top);
  }
  const auto it = std::upper_bound(expectations_.begin(), expectations_.end(), b);
  const std::size_t k = static_cast<std::size_t>(it - expectations_.begin()) - 1;
  const double h = expectations_[k + 1] - expectations_[k];
  const double t = (b - expectations_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0, h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2, h11 = t3 - t2;
  const double v = h00 * rates_[k] + h10 * h * slopes_[k] + h01 * rates_[k + 1] + h11 * h * slopes_[k + 1];
  return std::clamp(v, rates_[k], rates_[k + 1]);
}

void InverseTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "lambda,expectation,slope\n" << std::setprecision(17);
  for (std::size_t k = 0; k < rates_.size(); ++k)
    os << rates_[k] << ',' << expectations_[k] << ',' << slopes_[k] << '\n';
}

InverseTable build_inverse_table(double lambda_max, std::size_t resolution) {
  return InverseTable(lambda_max, resolution);
}

std::vector<double> ml_inverse(const InverseTable& table, std::span<const double> b) {
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = table.invert(b[i]);
  return out;
}

}  // namespace spadcam
