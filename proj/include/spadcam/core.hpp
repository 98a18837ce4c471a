// ============================================================================
// core.hpp -- shared domain types for the SPAD/DMD imaging toolkit
//
// Pixels are addressed two ways. Domain math uses 1-based linear indices over
// the column-stacked image (pixel 1 is the top-left, pixel `rows` the bottom
// of the first column). Storage is 0-based everywhere; conversion happens at
// the pixel_to_rowcol / rowcol_to_pixel boundary only.
// ============================================================================
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spadcam {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

// ============================================================================
// Errors. The CLI maps each family onto its own exit code.
// ============================================================================
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ============================================================================
// Grid
// ============================================================================
struct RowCol {
  std::size_t row{0};  // 1-based
  std::size_t col{0};  // 1-based
  friend bool operator==(const RowCol&, const RowCol&) = default;
};

struct GridShape {
  std::size_t rows{0};
  std::size_t cols{0};

  GridShape() = default;
  GridShape(std::size_t r, std::size_t c);

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// 1-based linear index -> 1-based (row, col), column-stacked.
RowCol pixel_to_rowcol(std::size_t pixel, const GridShape& shape);
std::size_t rowcol_to_pixel(RowCol rc, const GridShape& shape);

// ============================================================================
// Dense row-major matrix. Row i of a histogram-like matrix is pixel i.
// ============================================================================
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_{0};
  std::size_t cols_{0};
  std::vector<T> data_;
};

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

// ============================================================================
// Physical configuration
// ============================================================================

/// Detector, timing and background parameters. Rates are photons/second,
/// durations are seconds.
struct SystemParams {
  double eta{0.35};             // quantum efficiency
  double ambient_rate{10.0};    // n_a
  double dark_rate{3.6};        // n_d
  double repetitions{5e6};      // N_r pulses per measurement
  double bin_width{4e-12};      // Delta
  std::size_t bins{1410};       // m
  std::optional<double> deadtime;
  double repetition_period{1.0 / 70e6};

  double observation_window() const noexcept { return bin_width * static_cast<double>(bins); }
  /// Detected background photons per bin per repetition, (eta*n_a + n_d)*Delta.
  double background_per_bin() const noexcept { return (eta * ambient_rate + dark_rate) * bin_width; }
  /// Depth of a lag of one time-bin, (c/2)*Delta.
  double bin_depth() const noexcept { return 0.5 * kSpeedOfLight * bin_width; }

  void validate() const;
};

struct IlluminationConfig {
  std::size_t window{5};  // w, the window is w x w pixels
  double epsilon{0.001};  // off-state leakage, ~1/contrast ratio

  void validate(const GridShape& shape) const;
};

/// Ground-truth scene: per-pixel relative reflectivity and depth in meters.
struct SceneModel {
  GridShape shape;
  std::vector<double> reflectivity;
  std::vector<double> depth;

  /// Structural checks only (sizes, signs).
  void validate() const;
  /// Also requires every time of flight to land inside the observation window.
  void validate(const SystemParams& params) const;
};

}  // namespace spadcam
