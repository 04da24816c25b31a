#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "demix/gennet.hpp"
#include "demix/mixing.hpp"
#include "demix/rng.hpp"

namespace demix {

struct SolverConfig {
  double learning_rate = 1e-2;
  std::size_t iterations = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-8;
  std::size_t restarts = 0;
  /// When set, latents are radially projected onto the balls B(r), B(r')
  /// after every step (and at initialization).
  std::optional<std::pair<double, double>> project_radii;
  RngSeed seed{};
  std::size_t record_trace_every = 1;

  void validate() const;
};

enum class InitKind { random_normal, encoder_perturbed, provided };

struct InitScheme {
  InitKind kind = InitKind::random_normal;
  double noise_scale = 0.1;
  /// Encoder mean heads (E_g, E_h), each mapping the mixture to a latent.
  std::optional<std::pair<GeneratorNet, GeneratorNet>> encoders;
  std::optional<std::pair<Vector, Vector>> provided_latents;

  static InitScheme random();
  static InitScheme provided(Vector u0, Vector v0);
  static InitScheme encoder(GeneratorNet eg, GeneratorNet eh, double noise_scale = 0.1);

  void validate() const;
};

struct TracePoint {
  std::size_t iteration = 0;
  double loss = 0.0;
};

struct RecoveryResult {
  LatentPoint u_hat, v_hat;
  Vector x_hat, y_hat;
  /// One-matrix variant only: the recovered sum F(ŵ) = x̂ + ŷ.
  std::optional<Vector> combined;
  double final_loss = 0.0;
  double initial_loss = 0.0;
  std::vector<TracePoint> loss_trace;
  // Present when the ground truth is known.
  std::optional<double> mse_x, mse_y, mse_mixture;
  std::optional<double> relative_error;  // ‖ẑ − z*‖ / ‖z*‖
  /// final_loss minus the exact minimum, when the latter is computable
  /// (affine generators, no projection).
  std::optional<double> achieved_suboptimality;
  RngSeed seed{};             // stream of the winning restart
  std::size_t diverged_restarts = 0;
};

/// Starting latents for one restart. Deterministic in `seed`.
std::pair<Vector, Vector> initialize(const InitScheme& scheme, std::span<const double> mixture,
                                     std::size_t latent_u, std::size_t latent_v, RngSeed seed);
std::pair<Vector, Vector> initialize(const InitScheme& scheme, const DemixProblem& problem, RngSeed seed);

/// Differentiable objective over a latent pair (u, v) with |u| = ku, |v| = kv.
struct LatentObjective {
  std::size_t ku = 0;
  std::size_t kv = 0;
  std::function<LossAndGradient(std::span<const double>, std::span<const double>)> eval;
};

/// The optimizer behind solve(), for objectives that are not a DemixProblem.
/// Fills u_hat, v_hat, losses, trace and seed; nothing else.
RecoveryResult minimize_latents(const LatentObjective& objective, std::span<const double> mixture,
                                const SolverConfig& config, const InitScheme& init);

/// Adam on (u, v) jointly. Each restart j starts from initialize(…, stream
/// seed.stream + j) and keeps its lowest-loss iterate; the restart with the
/// smallest final loss wins, ties going to the lower stream.
RecoveryResult solve(const DemixProblem& problem, const SolverConfig& config, const InitScheme& init);

/// b₁ = Φ(g(u*) + h(v*)) + η. Only the sum F(w) = g(u) + h(v) is identifiable;
/// the reported components may be swapped or otherwise split.
RecoveryResult solve_one_matrix_variant(std::span<const double> b1, const DenseMatrix& phi, const GeneratorNet& g,
                                        const GeneratorNet& h, const SolverConfig& config,
                                        const InitScheme& init);

/// b₂ = Φ₁g(u*) + Φ₂h(v*) + η, solved as [Φ₁ Φ₂] acting on (g(u), h(v)).
RecoveryResult solve_two_matrix_variant(std::span<const double> b2, const DenseMatrix& phi1,
                                        const DenseMatrix& phi2, const GeneratorNet& g, const GeneratorNet& h,
                                        const SolverConfig& config, const InitScheme& init);

/// Minimum of (1/m)‖b − Φ·F(w)‖² over all w for an affine F. Throws
/// std::invalid_argument if F is not affine.
double affine_least_squares_minimum(std::span<const double> b, const DenseMatrix& phi, const GeneratorNet& f);

nlohmann::json config_to_json(const SolverConfig& config);
SolverConfig config_from_json(const nlohmann::json& doc);
nlohmann::json result_to_json(const RecoveryResult& result);

}  // namespace demix
