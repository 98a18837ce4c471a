// ============================================================================
// admm.hpp -- ADMM for the three regularized least-squares problems
//
//   minimize  1/2 ||A x - y||^2 + tau ||D x||_1   subject to  x in C
//
// with A the identity (stabilized-domain denoising) or the illumination
// circulant H (intensity deconvolution, per-time-slice deconvolution), D the
// full derivative stack or its gradient block, and C either [2*sqrt(3/8), inf)
// or the non-negative orthant. Splitting z1 = D x and z2 = x gives the
// iteration
//
//   x  <- (A^T A + rho1 D^T D + rho2 I)^{-1} (A^T y + rho1 D^T (z1 - u1) + rho2 (z2 - u2))
//   z1 <- S_{tau/rho1}(D x + u1)
//   z2 <- Proj_C(x + u2)
//   u1 <- u1 + D x - z1
//   u2 <- u2 + x - z2
//
// Every operator is a circulant on the column-stacked vector, so the x-update
// is one DFT, a pointwise divide and one inverse DFT.
// ============================================================================
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "spadcam/derivative.hpp"
#include "spadcam/forward_model.hpp"

namespace spadcam {

enum class Constraint { anscombe_floor, nonnegative };

double constraint_floor(Constraint c) noexcept;

/// Soft thresholding S_tau(x), elementwise.
std::vector<double> shrinkage(std::span<const double> x, double tau);
/// max(x, floor), elementwise.
std::vector<double> project(std::span<const double> x, double floor);

struct AdmmSettings {
  double rho1{1.0};
  double rho2{1.0};
  double reg_weight{0.1};  // tau: mu for denoising and slices, lambda for deconvolution
  std::size_t max_iters{500};
  double tol_primal{1e-5};
  double tol_dual{1e-5};

  void validate() const;
};

/// Per-iteration diagnostics. The objective trace is evaluated at the
/// quadratic-step iterate x; `final_objective` at the returned solution.
struct SolveReport {
  std::size_t iterations{0};
  bool converged{false};
  double primal_residual{0.0};
  double dual_residual{0.0};
  double final_objective{0.0};
  std::vector<double> primal_trace;
  std::vector<double> dual_trace;
  std::vector<double> objective_trace;

  /// iteration,primal_residual,dual_residual,objective
  void write_csv(const std::filesystem::path& path) const;
};

struct SolveResult {
  std::vector<double> solution;
  SolveReport report;
};

class AdmmSolver {
 public:
  /// `op` absent means A = I. The solver keeps its own copies of the operators.
  AdmmSolver(const DerivativeStack& stack, std::optional<IlluminationOperator> op, RegularizerMode mode,
             Constraint constraint, const AdmmSettings& settings);

  /// Runs from the all-zero split state. Returns z2, the projected iterate, so
  /// the constraint holds exactly. Thread-safe: all state is per call.
  SolveResult solve(std::span<const double> y) const;

  /// 1/2 ||A x - y||^2 + tau ||D x||_1 (constraint not checked).
  double objective(std::span<const double> x, std::span<const double> y) const;

  /// (A^T A + rho1 D^T D + rho2 I)^{-1} rhs.
  std::vector<double> quadratic_solve(std::span<const double> rhs) const;

  std::vector<double> apply_A(std::span<const double> x) const;
  std::vector<double> apply_At(std::span<const double> x) const;

  const AdmmSettings& settings() const noexcept { return settings_; }
  std::size_t size() const noexcept { return stack_.size(); }

 private:
  DerivativeStack stack_;
  std::optional<IlluminationOperator> op_;
  RegularizerMode mode_;
  Constraint constraint_;
  AdmmSettings settings_;
  RealFft fft_;
  std::vector<double> denominator_;
};

/// One-shot form of AdmmSolver.
SolveResult solve_generic(const std::optional<IlluminationOperator>& op, std::span<const double> y,
                          const DerivativeStack& stack, RegularizerMode mode, Constraint constraint,
                          const AdmmSettings& settings);

}  // namespace spadcam
