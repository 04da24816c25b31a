#pragma once

#include <optional>
#include <span>
#include <utility>

#include "demix/gennet.hpp"
#include "demix/linalg.hpp"

namespace demix {

/// B = [A  √m·I] acting on stacked signals z = (x, y) ∈ ℝⁿ × ℝᵐ.
class MixingOperator {
 public:
  explicit MixingOperator(DenseMatrix a);

  const DenseMatrix& a() const noexcept { return a_; }
  std::size_t m() const noexcept { return a_.rows(); }
  std::size_t n() const noexcept { return a_.cols(); }
  double scale() const noexcept { return scale_; }

  /// A·x + √m·y
  Vector apply(std::span<const double> x, std::span<const double> y) const;
  /// Same, on the stacked vector z = (x, y).
  Vector apply(std::span<const double> z) const;

 private:
  DenseMatrix a_;
  double scale_;
};

inline Vector mix(const MixingOperator& op, std::span<const double> x, std::span<const double> y) {
  return op.apply(x, y);
}

/// X_z = ‖Bz‖₂ − √m‖z‖₂.
double deviation_stat(const MixingOperator& op, std::span<const double> x, std::span<const double> y);

struct GroundTruth {
  Vector u, v;  // latents
  Vector x, y;  // signals g(u), h(v)
};

/// Observed mixture b = A·g(u*) + √m·h(v*) + η with the operator and both
/// generators. Immutable.
class DemixProblem {
 public:
  DemixProblem(Vector b, MixingOperator op, GeneratorNet g, GeneratorNet h,
               std::optional<Vector> noise = std::nullopt, std::optional<GroundTruth> truth = std::nullopt);

  /// Plants `u`, `v` and forms b from them plus `noise` (zero when absent).
  static DemixProblem planted(MixingOperator op, GeneratorNet g, GeneratorNet h, Vector u, Vector v,
                              std::optional<Vector> noise = std::nullopt);

  const Vector& b() const noexcept { return b_; }
  const MixingOperator& op() const noexcept { return op_; }
  const GeneratorNet& g() const noexcept { return g_; }
  const GeneratorNet& h() const noexcept { return h_; }
  const std::optional<Vector>& noise() const noexcept { return noise_; }
  const std::optional<GroundTruth>& truth() const noexcept { return truth_; }

 private:
  Vector b_;
  MixingOperator op_;
  GeneratorNet g_;
  GeneratorNet h_;
  std::optional<Vector> noise_;
  std::optional<GroundTruth> truth_;
};

/// (1/m)‖b − mix(g(u), h(v))‖².
double loss(const DemixProblem& problem, std::span<const double> u, std::span<const double> v);

struct LossAndGradient {
  double loss = 0.0;
  Vector grad_u;
  Vector grad_v;
};

/// Gradient of `loss`: with ρ = mix − b, ∇ᵤ = (2/m)·Jgᵀ Aᵀρ and
/// ∇ᵥ = (2/m)·Jhᵀ (√m·ρ).
LossAndGradient loss_gradient(const DemixProblem& problem, std::span<const double> u,
                              std::span<const double> v);

}  // namespace demix
