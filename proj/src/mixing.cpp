#include "demix/mixing.hpp"

#include <cmath>
#include <string>

#include "demix/errors.hpp"

namespace demix {

MixingOperator::MixingOperator(DenseMatrix a)
    : a_(std::move(a)), scale_(std::sqrt(static_cast<double>(a_.rows()))) {
  if (a_.rows() == 0 || a_.cols() == 0) throw DimensionError("mixing matrix must be non-empty");
}

Vector MixingOperator::apply(std::span<const double> x, std::span<const double> y) const {
  if (y.size() != m()) {
    throw DimensionError("mix: y has length " + std::to_string(y.size()) + ", expected m = " +
                         std::to_string(m()));
  }
  Vector out = matvec(a_, x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale_ * y[i];
  return out;
}

Vector MixingOperator::apply(std::span<const double> z) const {
  if (z.size() != n() + m()) {
    throw DimensionError("mix: stacked vector has length " + std::to_string(z.size()) + ", expected n + m = " +
                         std::to_string(n() + m()));
  }
  return apply(z.first(n()), z.subspan(n()));
}

double deviation_stat(const MixingOperator& op, std::span<const double> x, std::span<const double> y) {
  // ‖Bz‖ = √m·‖Ax/√m + y‖. Factoring √m out of both terms makes X_z exactly
  // zero whenever x = 0.
  if (y.size() != op.m()) throw DimensionError("deviation_stat: y must have length m");
  Vector r = matvec(op.a(), x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = r[i] / op.scale() + y[i];
  return op.scale() * (norm2(r) - std::sqrt(squared_norm(x) + squared_norm(y)));
}

DemixProblem::DemixProblem(Vector b, MixingOperator op, GeneratorNet g, GeneratorNet h,
                           std::optional<Vector> noise, std::optional<GroundTruth> truth)
    : b_(std::move(b)),
      op_(std::move(op)),
      g_(std::move(g)),
      h_(std::move(h)),
      noise_(std::move(noise)),
      truth_(std::move(truth)) {
  if (b_.size() != op_.m()) {
    throw DimensionError("mixture has length " + std::to_string(b_.size()) + ", operator has m = " +
                         std::to_string(op_.m()));
  }
  if (g_.output_dim() != op_.n()) {
    throw StructuralError("g outputs " + std::to_string(g_.output_dim()) + " values, operator has n = " +
                          std::to_string(op_.n()));
  }
  if (h_.output_dim() != op_.m()) {
    throw StructuralError("h outputs " + std::to_string(h_.output_dim()) + " values, operator has m = " +
                          std::to_string(op_.m()));
  }
  if (noise_ && noise_->size() != op_.m()) throw DimensionError("noise must have length m");
  if (truth_) {
    if (truth_->u.size() != g_.latent_dim() || truth_->v.size() != h_.latent_dim() ||
        truth_->x.size() != op_.n() || truth_->y.size() != op_.m()) {
      throw DimensionError("ground truth dimensions do not match the problem");
    }
    if (noise_) {
      Vector expect = op_.apply(truth_->x, truth_->y);
      for (std::size_t i = 0; i < expect.size(); ++i) expect[i] += (*noise_)[i];
      const double scale = std::max(norm2(expect), 1e-300);
      if (distance(expect, b_) > 1e-10 * scale) {
        throw StructuralError("mixture is inconsistent with ground truth and noise");
      }
    }
  }
}

DemixProblem DemixProblem::planted(MixingOperator op, GeneratorNet g, GeneratorNet h, Vector u, Vector v,
                                   std::optional<Vector> noise) {
  GroundTruth truth{u, v, g.forward(u), h.forward(v)};
  Vector b = op.apply(truth.x, truth.y);
  if (noise) {
    require_same_length(*noise, b, "noise");
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += (*noise)[i];
  } else {
    noise = Vector(b.size(), 0.0);
  }
  return DemixProblem(std::move(b), std::move(op), std::move(g), std::move(h), std::move(noise),
                      std::move(truth));
}

namespace {

void check_latents(const DemixProblem& p, std::span<const double> u, std::span<const double> v) {
  if (u.size() != p.g().latent_dim()) {
    throw DimensionError("u has length " + std::to_string(u.size()) + ", g expects " +
                         std::to_string(p.g().latent_dim()));
  }
  if (v.size() != p.h().latent_dim()) {
    throw DimensionError("v has length " + std::to_string(v.size()) + ", h expects " +
                         std::to_string(p.h().latent_dim()));
  }
}

Vector residual(const DemixProblem& p, std::span<const double> u, std::span<const double> v) {
  Vector r = p.op().apply(p.g().forward(u), p.h().forward(v));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= p.b()[i];
  return r;
}

}  // namespace

double loss(const DemixProblem& problem, std::span<const double> u, std::span<const double> v) {
  check_latents(problem, u, v);
  return squared_norm(residual(problem, u, v)) / static_cast<double>(problem.op().m());
}

LossAndGradient loss_gradient(const DemixProblem& problem, std::span<const double> u,
                              std::span<const double> v) {
  check_latents(problem, u, v);
  const Vector rho = residual(problem, u, v);
  const double m = static_cast<double>(problem.op().m());
  LossAndGradient out;
  out.loss = squared_norm(rho) / m;

  Vector cot_x = matvec_transposed(problem.op().a(), rho);
  Vector cot_y(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) cot_y[i] = problem.op().scale() * rho[i];
  out.grad_u = problem.g().latent_gradient(u, cot_x);
  out.grad_v = problem.h().latent_gradient(v, cot_y);
  for (double& d : out.grad_u) d *= 2.0 / m;
  for (double& d : out.grad_v) d *= 2.0 / m;
  return out;
}

}  // namespace demix
