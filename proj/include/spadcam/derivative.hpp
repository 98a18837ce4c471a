// ============================================================================
// derivative.hpp -- stacked directional derivative operator D = [grad; rho*grad'']
//
// Four directions on the column-stacked image, each a circular offset of the
// linear index:
//
//   x  (next column)          offset rows
//   y  (next row)             offset 1
//   xy (down-right diagonal)  offset rows + 1
//   yx (up-right diagonal)    offset rows - 1
//
// First derivatives are forward differences x[k+s] - x[k]; second derivatives
// are x[k-s] - 2 x[k] + x[k+s]. Indices wrap modulo n, the same periodic
// convention as the illumination circulant, so D^T D is diagonal in the same
// DFT basis. Output ordering: A_x, A_y, A_xy, A_yx, then rho * (A''_x, A''_y,
// A''_xy, A''_yx), each block n long.
// ============================================================================
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "spadcam/core.hpp"

namespace spadcam {

enum class Direction { x, y, xy, yx };
inline constexpr std::array<Direction, 4> kDirections{Direction::x, Direction::y, Direction::xy, Direction::yx};

/// Full D (8n rows) or the gradient block alone (4n rows).
enum class RegularizerMode { full, gradient_only };

class DerivativeStack {
 public:
  explicit DerivativeStack(const GridShape& shape, double rho_second = 0.5);

  const GridShape& shape() const noexcept { return shape_; }
  double rho_second() const noexcept { return rho_second_; }
  std::size_t size() const noexcept { return shape_.size(); }
  std::size_t output_size(RegularizerMode mode) const noexcept {
    return (mode == RegularizerMode::full ? 8 : 4) * size();
  }

  /// Circular offset of a direction on the linear index, in [0, n).
  std::size_t offset(Direction d) const noexcept;

  /// Taps c of each operator in the (A x)_k = sum_d c[d] x[(k+d) mod n] form.
  std::vector<double> first_taps(Direction d) const;
  std::vector<double> second_taps(Direction d) const;  // unscaled by rho

  /// out = D x (out.size() == output_size(mode)).
  void apply(std::span<const double> x, std::span<double> out, RegularizerMode mode) const;
  /// out += D^T y.
  void apply_transpose_add(std::span<const double> y, std::span<double> out, RegularizerMode mode) const;

  /// Eigenvalues of D^T D on DFT bins 0..n/2.
  std::vector<double> gram_spectrum(RegularizerMode mode) const;

 private:
  GridShape shape_;
  double rho_second_;
};

/// D x with the full 8n-row stack.
std::vector<double> apply_D(const DerivativeStack& stack, std::span<const double> x);

}  // namespace spadcam
