// ============================================================================
// variance_transform.hpp -- Anscombe transform and its exact unbiased inverse
//
// f(v) = 2*sqrt(v + 3/8) turns Poisson counts into roughly unit-variance
// Gaussian data. Inverting f algebraically is biased at low counts, so the
// inverse maps a stabilized value b to the rate lambda whose expected
// transform E[f(Y)], Y ~ Poisson(lambda), equals b. The expectation is tabulated
// once by summing the Poisson series and inverted by table lookup.
// ============================================================================
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace spadcam {

/// 2*sqrt(3/8), the transform of a zero count.
inline constexpr double kAnscombeFloor = 1.2247448713915890491;

double anscombe(double v);
std::vector<double> anscombe(std::span<const double> v);
std::vector<double> anscombe(std::span<const std::uint64_t> v);

/// E[f(Y)] for Y ~ Poisson(lambda); series truncation error < 1e-12.
double anscombe_expectation(double lambda);
/// d/dlambda E[f(Y)] = E[f(Y+1) - f(Y)].
double anscombe_expectation_slope(double lambda);

/// Asymptotic closed-form of the exact unbiased inverse, accurate for b >~ 4.
double asymptotic_unbiased_inverse(double b);

class InverseTable {
 public:
  /// Knots: lambda = 0 plus `resolution` geometrically spaced rates from
  /// 1e-3 (or lambda_max/10 if smaller) to lambda_max.
  InverseTable(double lambda_max, std::size_t resolution = 4096);

  const std::vector<double>& rates() const noexcept { return rates_; }
  const std::vector<double>& expectations() const noexcept { return expectations_; }
  double lambda_max() const noexcept { return rates_.back(); }

  /// Rate whose expected transform equals b; 0 at or below the floor.
  double invert(double b) const;

  /// lambda,expectation,slope per knot.
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<double> rates_;
  std::vector<double> expectations_;
  std::vector<double> slopes_;  // d lambda / d b at each knot
};

InverseTable build_inverse_table(double lambda_max, std::size_t resolution = 4096);

std::vector<double> ml_inverse(const InverseTable& table, std::span<const double> b);

}  // namespace spadcam
