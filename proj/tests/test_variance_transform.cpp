#include <doctest.h>

#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "spadcam/variance_transform.hpp"

using namespace spadcam;

namespace {

// Direct Poisson expectation with Boost's pmf, summed far past the mean.
double oracle_expectation(double lambda) {
  if (lambda == 0.0) return kAnscombeFloor;
  const boost::math::poisson_distribution<double> d(lambda);
  const auto hi = static_cast<int>(lambda + 20.0 * std::sqrt(lambda) + 60.0);
  double s = 0.0;
  for (int k = 0; k <= hi; ++k) s += boost::math::pdf(d, k) * 2.0 * std::sqrt(k + 0.375);
  return s;
}

}  // namespace

TEST_SUITE("variance_transform") {
  TEST_CASE("forward transform examples") {
    CHECK(anscombe(0.0) == doctest::Approx(1.224744871391589).epsilon(1e-15));
    CHECK(anscombe(0.0) == doctest::Approx(kAnscombeFloor).epsilon(1e-15));
    CHECK(anscombe(1.0) == doctest::Approx(2.345207879911715).epsilon(1e-14));
    CHECK(anscombe(100.0) == doctest::Approx(20.0374649).epsilon(1e-8));
    const std::vector<std::uint64_t> v{0, 1, 100};
    const auto b = anscombe(std::span<const std::uint64_t>(v));
    CHECK(b[2] == anscombe(100.0));
  }

  TEST_CASE("transformed poisson counts have near-unit variance") {
    std::mt19937_64 rng(11);
    for (double lam : {5.0, 20.0, 200.0}) {
      std::poisson_distribution<int> d(lam);
      double s = 0, s2 = 0;
      const int n = 200000;
      for (int i = 0; i < n; ++i) {
        const double b = anscombe(static_cast<double>(d(rng)));
        s += b;
        s2 += b * b;
      }
      const double var = s2 / n - (s / n) * (s / n);
      CAPTURE(lam);
      CHECK(std::abs(var - 1.0) < 0.06);
    }
  }

  TEST_CASE("expectation against the boost pmf series") {
    for (double lam : {0.0, 1e-4, 0.05, 0.5, 1.0, 3.7, 10.0, 55.0, 400.0, 5000.0}) {
      CAPTURE(lam);
      CHECK(anscombe_expectation(lam) == doctest::Approx(oracle_expectation(lam)).epsilon(1e-11));
    }
  }

  TEST_CASE("expectation is increasing and its slope matches finite differences") {
    double prev = anscombe_expectation(0.0);
    for (double lam = 0.01; lam < 100.0; lam *= 1.3) {
      const double e = anscombe_expectation(lam);
      CHECK(e > prev);
      prev = e;
      const double h = 1e-5 * std::max(1.0, lam);
      const double fd = (anscombe_expectation(lam + h) - anscombe_expectation(lam - std::min(h, lam))) /
                        (h + std::min(h, lam));
      CHECK(anscombe_expectation_slope(lam) == doctest::Approx(fd).epsilon(1e-5));
    }
  }

  TEST_CASE("asymptotic inverse agrees with the exact inverse at high counts") {
    const InverseTable t(2000.0);
    for (double lam : {10.0, 50.0, 300.0, 1500.0}) {
      const double b = anscombe_expectation(lam);
      CAPTURE(lam);
      // The closed form itself is off by ~0.14/sqrt(lambda) (checked with mpmath).
      CHECK(std::abs(asymptotic_unbiased_inverse(b) - lam) < 0.2 / std::sqrt(lam));
      CHECK(t.invert(b) == doctest::Approx(lam).epsilon(1e-8));
    }
  }

  TEST_CASE("table inverse round trip and floor") {
    const auto t = build_inverse_table(1000.0);
    CHECK(t.rates().front() == 0.0);
    CHECK(t.lambda_max() == doctest::Approx(1000.0));
    CHECK(t.invert(kAnscombeFloor) == 0.0);
    CHECK(t.invert(0.5) == 0.0);
    for (double lam : {1e-3, 0.02, 0.3, 1.0, 2.5, 7.0, 33.3, 999.0}) {
      CAPTURE(lam);
      CHECK(t.invert(anscombe_expectation(lam)) == doctest::Approx(lam).epsilon(1e-7));
    }
    // Monotone in b.
    double prev = 0.0;
    for (double b = kAnscombeFloor; b < 60.0; b += 0.37) {
      const double l = t.invert(b);
      CHECK(l >= prev);
      prev = l;
    }
    CHECK_THROWS_AS(InverseTable(-1.0), std::invalid_argument);
  }

  TEST_CASE("unbiased inverse removes the low-count bias of the algebraic inverse") {
    const InverseTable t(50.0);
    const double lam = 2.0;
    const double b = anscombe_expectation(lam);
    const double algebraic = b * b / 4.0 - 0.375;
    CHECK(std::abs(algebraic - lam) > 0.2);
    CHECK(t.invert(b) == doctest::Approx(lam).epsilon(1e-8));
  }

  TEST_CASE("ml_inverse is elementwise and the table csv is written") {
    const InverseTable t(100.0, 512);
    const std::vector<double> b{kAnscombeFloor, 3.0, 10.0};
    const auto l = ml_inverse(t, b);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(l[i] == t.invert(b[i]));
    const auto p = std::filesystem::temp_directory_path() / "spadcam_table.csv";
    t.write_csv(p);
    std::ifstream in(p);
    std::string header;
    std::getline(in, header);
    CHECK(header == "lambda,expectation,slope");
    std::size_t lines = 0;
    for (std::string s; std::getline(in, s);) ++lines;
    CHECK(lines == t.rates().size());
    std::filesystem::remove(p);
  }
}
