#include <cmath>

#include "spadcam/simd/kernels.hpp"

namespace spadcam::simd {
namespace {

inline double soft(double t, double tau) {
  if (t > tau) return t - tau;
  if (t < -tau) return t + tau;
  return 0.0;
}

void shrink(const double* x, double* out, std::size_t len, double tau) {
  for (std::size_t i = 0; i < len; ++i) out[i] = soft(x[i], tau);
}

void clamp_floor(const double* x, double* out, std::size_t len, double floor) {
  for (std::size_t i = 0; i < len; ++i) out[i] = x[i] > floor ? x[i] : floor;
}

void anscombe(const double* x, double* out, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) out[i] = 2.0 * std::sqrt(x[i] + 0.375);
}

double shrink_step(const double* ax, double* z, double* u, double* z_delta, std::size_t len,
                   double tau) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double t = ax[i] + u[i];
    const double zn = soft(t, tau);
    const double r = ax[i] - zn;
    z_delta[i] = zn - z[i];
    z[i] = zn;
    u[i] = u[i] + r;
    acc += r * r;
  }
  return acc;
}

double project_step(const double* x, double* z, double* u, double* z_delta, std::size_t len,
                    double floor) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double t = x[i] + u[i];
    const double zn = t > floor ? t : floor;
    const double r = x[i] - zn;
    z_delta[i] = zn - z[i];
    z[i] = zn;
    u[i] = u[i] + r;
    acc += r * r;
  }
  return acc;
}

void sub(const double* a, const double* b, double* out, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) out[i] = a[i] - b[i];
}

void second_diff(const double* a, const double* b, const double* c, double* out, std::size_t len,
                 double scale) {
  for (std::size_t i = 0; i < len; ++i) out[i] = scale * ((a[i] - 2.0 * b[i]) + c[i]);
}

void acc_sub(double* out, const double* a, const double* b, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) out[i] += a[i] - b[i];
}

void acc_second_diff(double* out, const double* a, const double* b, const double* c,
                     std::size_t len, double scale) {
  for (std::size_t i = 0; i < len; ++i) out[i] += scale * ((a[i] - 2.0 * b[i]) + c[i]);
}

void add_scaled_diff(const double* a, const double* b, const double* c, double* out,
                     std::size_t len, double alpha) {
  for (std::size_t i = 0; i < len; ++i) out[i] = a[i] + alpha * (b[i] - c[i]);
}

void axpby(const double* x, const double* y, double* out, std::size_t len, double alpha, double beta) {
  for (std::size_t i = 0; i < len; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void spectral_divide(double* spec, const double* denom, std::size_t bins) {
  for (std::size_t k = 0; k < bins; ++k) {
    spec[2 * k] /= denom[k];
    spec[2 * k + 1] /= denom[k];
  }
}

void spectral_multiply(const double* x, const double* h, double* out, std::size_t bins, bool conj) {
  const double sign = conj ? -1.0 : 1.0;
  for (std::size_t k = 0; k < bins; ++k) {
    const double xr = x[2 * k], xi = x[2 * k + 1];
    const double hr = h[2 * k], hi = sign * h[2 * k + 1];
    out[2 * k] = xr * hr - xi * hi;
    out[2 * k + 1] = xr * hi + xi * hr;
  }
}

double sum_sq(const double* x, std::size_t len) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) acc += x[i] * x[i];
  return acc;
}

double abs_sum(const double* x, std::size_t len) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) acc += std::fabs(x[i]);
  return acc;
}

double sum(const double* x, std::size_t len) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) acc += x[i];
  return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::scalar,     "scalar",      shrink,          clamp_floor,      anscombe,
      shrink_step,     project_step,  sub,             second_diff,      acc_sub,
      acc_second_diff, add_scaled_diff, axpby, spectral_divide, spectral_multiply, sum_sq,
      abs_sum,         sum,
  };
  return table;
}

}  // namespace spadcam::simd
