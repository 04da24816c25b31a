#pragma once

#include <span>

#include "demix/gennet.hpp"
#include "demix/linalg.hpp"
#include "demix/solver.hpp"

namespace demix {

/// Image-domain mixture b = clip(Φ·x₈ + x₁) with Φ square.
Vector clipped_mixture(const DenseMatrix& phi, std::span<const double> x8, std::span<const double> x1);

/// Each value clamped to [0, 1].
Vector clip_unit(std::span<const double> v);

struct ImageDemixResult {
  RecoveryResult recovery;  // x_hat ↔ decoder8 (behind Φ), y_hat ↔ decoder1
  Vector x1_hat, x8_hat;    // clipped decoder outputs
  Vector mixture_hat;       // clip(Φ·x̂₈ + x̂₁)
  double mse_mixture = 0.0;
  double mse_x1 = 0.0;  // only meaningful when the true images are supplied
  double mse_x8 = 0.0;
};

/// Minimizes mean((clip(Φ·G₈(u) + G₁(v)) − b)²) over (u, v). The clip is
/// treated as the identity in the gradient.
ImageDemixResult demix_images(std::span<const double> b, const DenseMatrix& phi, const GeneratorNet& decoder8,
                              const GeneratorNet& decoder1, const SolverConfig& config, const InitScheme& init,
                              std::span<const double> x8_true = {}, std::span<const double> x1_true = {});

}  // namespace demix
