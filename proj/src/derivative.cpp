#include "spadcam/derivative.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spadcam/simd/kernels.hpp"

namespace spadcam {

DerivativeStack::DerivativeStack(const GridShape& shape, double rho_second) : shape_(shape), rho_second_(rho_second) {
  if (shape.size() == 0) throw ValidationError("derivative stack needs a non-empty grid");
  if (!(rho_second >= 0.0) || !std::isfinite(rho_second)) throw ValidationError("rho must be finite and >= 0");
}

std::size_t DerivativeStack::offset(Direction d) const noexcept {
  const std::size_t n = size(), r = shape_.rows;
  switch (d) {
    case Direction::x: return r % n;
    case Direction::y: return 1 % n;
    case Direction::xy: return (r + 1) % n;
    case Direction::yx: return (r + n - 1) % n;
  }
  return 0;
}

std::vector<double> DerivativeStack::first_taps(Direction d) const {
  std::vector<double> c(size(), 0.0);
  c[0] -= 1.0;
  c[offset(d)] += 1.0;
  return c;
}

std::vector<double> DerivativeStack::second_taps(Direction d) const {
  const std::size_t n = size(), s = offset(d);
  std::vector<double> c(n, 0.0);
  c[(n - s) % n] += 1.0;
  c[0] -= 2.0;
  c[s] += 1.0;
  return c;
}

namespace {

// Splits [0, n) at the points where k-s or k+s wraps, so each segment reads
// contiguous memory for x[k-s], x[k] and x[k+s].
template <typename F>
void for_segments(std::size_t n, std::size_t s, F f) {
  std::array<std::size_t, 4> cuts{0, s, n - s, n};
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const std::size_t a = cuts[c], b = cuts[c + 1];
    if (a >= b) continue;
    f(a, b - a, (a + n - s) % n, (a + s) % n);
  }
}

}  // namespace

void DerivativeStack::apply(std::span<const double> x, std::span<double> out, RegularizerMode mode) const {
  const std::size_t n = size();
  if (x.size() != n || out.size() != output_size(mode)) throw ValidationError("apply_D: dimension mismatch");
  const auto& k = simd::kernels();
  const double* px = x.data();

  for (std::size_t b = 0; b < 4; ++b) {
    double* o = out.data() + b * n;
    const std::size_t s = offset(kDirections[b]);
    if (s == 0) {
      std::fill(o, o + n, 0.0);
      continue;
    }
    for_segments(n, s, [&](std::size_t at, std::size_t len, std::size_t, std::size_t plus) {
      k.sub(px + plus, px + at, o + at, len);
    });
  }
  if (mode == RegularizerMode::gradient_only) return;

  for (std::size_t b = 0; b < 4; ++b) {
    double* o = out.data() + (4 + b) * n;
    const std::size_t s = offset(kDirections[b]);
    if (s == 0) {
      std::fill(o, o + n, 0.0);
      continue;
    }
    for_segments(n, s, [&](std::size_t at, std::size_t len, std::size_t minus, std::size_t plus) {
      k.second_diff(px + minus, px + at, px + plus, o + at, len, rho_second_);
    });
  }
}

void DerivativeStack::apply_transpose_add(std::span<const double> y, std::span<double> out,
                                          RegularizerMode mode) const {
  const std::size_t n = size();
  if (out.size() != n || y.size() != output_size(mode)) throw ValidationError("apply_Dt: dimension mismatch");
  const auto& k = simd::kernels();
  double* o = out.data();

  // (A^T y)_j = y[j-s] - y[j] for the forward difference.
  for (std::size_t b = 0; b < 4; ++b) {
    const std::size_t s = offset(kDirections[b]);
    if (s == 0) continue;
    const double* py = y.data() + b * n;
    for_segments(n, s, [&](std::size_t at, std::size_t len, std::size_t minus, std::size_t) {
      k.acc_sub(o + at, py + minus, py + at, len);
    });
  }
  if (mode == RegularizerMode::gradient_only) return;

  // The second-difference stencil is symmetric, so A''^T = A''.
  for (std::size_t b = 0; b < 4; ++b) {
    const std::size_t s = offset(kDirections[b]);
    if (s == 0) continue;
    const double* py = y.data() + (4 + b) * n;
    for_segments(n, s, [&](std::size_t at, std::size_t len, std::size_t minus, std::size_t plus) {
      k.acc_second_diff(o + at, py + minus, py + at, py + plus, len, rho_second_);
    });
  }
}

std::vector<double> DerivativeStack::gram_spectrum(RegularizerMode mode) const {
  const std::size_t n = size(), bins = n / 2 + 1;
  std::vector<double> g(bins, 0.0);
  const double rho2 = rho_second_ * rho_second_;
  for (std::size_t f = 0; f < bins; ++f) {
    for (Direction d : kDirections) {
      const std::size_t s = offset(d);
      if (s == 0) continue;
      // Reduce f*s mod n before scaling so the phase stays accurate for large n.
      const double phase = 2.0 * std::numbers::pi * static_cast<double>((f * s) % n) / static_cast<double>(n);
      const double one_minus_cos = 1.0 - std::cos(phase);
      g[f] += 2.0 * one_minus_cos;  // |e^{i phase} - 1|^2
      if (mode == RegularizerMode::full) g[f] += rho2 * 4.0 * one_minus_cos * one_minus_cos;
    }
  }
  return g;
}

std::vector<double> apply_D(const DerivativeStack& stack, std::span<const double> x) {
  std::vector<double> out(stack.output_size(RegularizerMode::full));
  stack.apply(x, out, RegularizerMode::full);
  return out;
}

}  // namespace spadcam
