#include "spadcam/admm.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "spadcam/simd/kernels.hpp"
#include "spadcam/variance_transform.hpp"

namespace spadcam {

double constraint_floor(Constraint c) noexcept {
  return c == Constraint::anscombe_floor ? kAnscombeFloor : 0.0;
}

std::vector<double> shrinkage(std::span<const double> x, double tau) {
  if (!(tau > 0.0)) throw ValidationError("shrinkage threshold must be positive");
  std::vector<double> out(x.size());
  simd::kernels().shrink(x.data(), out.data(), x.size(), tau);
  return out;
}

std::vector<double> project(std::span<const double> x, double floor) {
  if (!std::isfinite(floor)) throw ValidationError("projection floor must be finite");
  std::vector<double> out(x.size());
  simd::kernels().clamp_floor(x.data(), out.data(), x.size(), floor);
  return out;
}

void AdmmSettings::validate() const {
  if (!(rho1 > 0.0) || !(rho2 > 0.0)) throw ValidationError("ADMM penalties rho1, rho2 must be positive");
  if (!(reg_weight > 0.0)) throw ValidationError("regularization weight must be positive");
  if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) throw ValidationError("ADMM tolerances must be positive");
}

void SolveReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "iteration,primal_residual,dual_residual,objective\n" << std::setprecision(17);
  for (std::size_t k = 0; k < objective_trace.size(); ++k)
    os << k + 1 << ',' << primal_trace[k] << ',' << dual_trace[k] << ',' << objective_trace[k] << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

AdmmSolver::AdmmSolver(const DerivativeStack& stack, std::optional<IlluminationOperator> op, RegularizerMode mode,
                       Constraint constraint, const AdmmSettings& settings)
    : stack_(stack),
      op_(std::move(op)),
      mode_(mode),
      constraint_(constraint),
      settings_(settings),
      fft_(stack.size()) {
  settings_.validate();
  if (op_ && op_->shape().size() != stack_.size())
    throw ValidationError("illumination operator and derivative stack sizes differ");

  denominator_ = stack_.gram_spectrum(mode_);
  for (std::size_t f = 0; f < denominator_.size(); ++f) {
    const double a2 = op_ ? std::norm(op_->spectrum()[f]) : 1.0;
    denominator_[f] = a2 + settings_.rho1 * denominator_[f] + settings_.rho2;
  }
}

std::vector<double> AdmmSolver::apply_A(std::span<const double> x) const {
  if (!op_) return {x.begin(), x.end()};
  return apply_H(*op_, x);
}

std::vector<double> AdmmSolver::apply_At(std::span<const double> x) const {
  if (!op_) return {x.begin(), x.end()};
  return apply_Ht(*op_, x);
}

double AdmmSolver::objective(std::span<const double> x, std::span<const double> y) const {
  const auto& k = simd::kernels();
  std::vector<double> r = apply_A(x);
  k.sub(r.data(), y.data(), r.data(), r.size());
  std::vector<double> dx(stack_.output_size(mode_));
  stack_.apply(x, dx, mode_);
  return 0.5 * k.sum_sq(r.data(), r.size()) + settings_.reg_weight * k.abs_sum(dx.data(), dx.size());
}

std::vector<double> AdmmSolver::quadratic_solve(std::span<const double> rhs) const {
  if (rhs.size() != size()) throw ValidationError("quadratic_solve: dimension mismatch");
  Spectrum spec = fft_.forward(rhs);
  simd::kernels().spectral_divide(reinterpret_cast<double*>(spec.data()), denominator_.data(), spec.size());
  std::vector<double> x(size());
  fft_.inverse(spec, x);
  return x;
}

SolveResult AdmmSolver::solve(std::span<const double> y) const {
  const std::size_t n = size(), p = stack_.output_size(mode_);
  if (y.size() != n) throw ValidationError("ADMM data vector has the wrong length");
  const auto& k = simd::kernels();
  const double rho1 = settings_.rho1, rho2 = settings_.rho2;
  const double tau = settings_.reg_weight / rho1;
  const double floor = constraint_floor(constraint_);
  const double primal_tol = settings_.tol_primal * std::sqrt(static_cast<double>(n + p));
  const double dual_tol = settings_.tol_dual * std::sqrt(static_cast<double>(n));

  const std::vector<double> aty = apply_At(y);
  std::vector<double> x(n), rhs(n), g(n), ax(n), resid(n);
  std::vector<double> dx(p), w(p), z1(p, 0.0), u1(p, 0.0), dz1(p);
  std::vector<double> z2(n, 0.0), u2(n, 0.0), dz2(n);
  Spectrum spec(fft_.spectrum_size()), aspec(fft_.spectrum_size());
  auto* sp = reinterpret_cast<double*>(spec.data());
  auto* ap = reinterpret_cast<double*>(aspec.data());

  SolveResult result;
  SolveReport& rep = result.report;
  rep.primal_trace.reserve(settings_.max_iters);
  rep.dual_trace.reserve(settings_.max_iters);
  rep.objective_trace.reserve(settings_.max_iters);

  for (std::size_t it = 1; it <= settings_.max_iters; ++it) {
    // x-minimization
    k.sub(z1.data(), u1.data(), w.data(), p);
    std::fill(g.begin(), g.end(), 0.0);
    stack_.apply_transpose_add(w, g, mode_);
    k.add_scaled_diff(aty.data(), z2.data(), u2.data(), rhs.data(), n, rho2);
    k.axpby(rhs.data(), g.data(), rhs.data(), n, 1.0, rho1);
    fft_.forward(rhs, spec);
    k.spectral_divide(sp, denominator_.data(), spec.size());
    if (op_) {
      k.spectral_multiply(sp, reinterpret_cast<const double*>(op_->spectrum().data()), ap, spec.size(), true);
      fft_.inverse(aspec, ax);
    }
    fft_.inverse(spec, x);
    if (!op_) ax = x;

    // z-minimizations and dual updates
    stack_.apply(x, dx, mode_);
    const double l1 = k.abs_sum(dx.data(), dx.size());
    const double r1 = k.shrink_step(dx.data(), z1.data(), u1.data(), dz1.data(), p, tau);
    const double r2 = k.project_step(x.data(), z2.data(), u2.data(), dz2.data(), n, floor);

    // Residuals: primal ||[Dx - z1; x - z2]||, dual ||rho1 D^T dz1 + rho2 dz2||.
    std::fill(g.begin(), g.end(), 0.0);
    stack_.apply_transpose_add(dz1, g, mode_);
    k.axpby(g.data(), dz2.data(), resid.data(), n, rho1, rho2);
    const double primal = std::sqrt(r1 + r2);
    const double dual = std::sqrt(k.sum_sq(resid.data(), n));

    k.sub(ax.data(), y.data(), resid.data(), n);
    const double obj = 0.5 * k.sum_sq(resid.data(), n) + settings_.reg_weight * l1;

    if (!std::isfinite(primal) || !std::isfinite(dual) || !std::isfinite(obj))
      throw SolverError("ADMM produced a non-finite value at iteration " + std::to_string(it));

    rep.iterations = it;
    rep.primal_residual = primal;
    rep.dual_residual = dual;
    rep.primal_trace.push_back(primal);
    rep.dual_trace.push_back(dual);
    rep.objective_trace.push_back(obj);
    if (primal <= primal_tol && dual <= dual_tol) {
      rep.converged = true;
      break;
    }
  }

  result.solution = std::move(z2);
  rep.final_objective = objective(result.solution, y);
  return result;
}

SolveResult solve_generic(const std::optional<IlluminationOperator>& op, std::span<const double> y,
                          const DerivativeStack& stack, RegularizerMode mode, Constraint constraint,
                          const AdmmSettings& settings) {
  return AdmmSolver(stack, op, mode, constraint, settings).solve(y);
}

}  // namespace spadcam
