#pragma once

#include <span>
#include <string>
#include <string_view>

#include "demix/linalg.hpp"
#include "demix/rng.hpp"

namespace demix {

/// K₀ = (log 2)^(-1/2): the smallest subgaussian norm a unit-variance
/// variable can have.
inline constexpr double kMinSubgaussianNorm = 1.2011224087864498;

enum class EnsembleKind { gaussian, rademacher, uniform_scaled };

/// Distribution of the rows of a K-subgaussian matrix. Entries are iid,
/// zero-mean and unit-variance, so rows are isotropic.
///
/// `k_analytic` is a certified upper bound on the row subgaussian norm in the
/// tail sense P(|<A_i, e>| >= t) <= 2 exp(-t²/K²) for every unit direction e:
///   gaussian       √(8/3)  <A_i, e> ~ N(0, 1) and 2 exp(-3t²/8) >= 2 Φ̄(t)
///   rademacher     √2      Hoeffding: ±1 entries have variance proxy 1
///   uniform-scaled √2      E exp(λX) = sinh(√3λ)/(√3λ) <= exp(λ²/2), so the
///                          variance proxy is 1 as well
/// All three exceed K₀. Details in docs/ensembles.md.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::gaussian;
  double k_analytic = 0.0;

  static EnsembleSpec of(EnsembleKind kind);
  static EnsembleSpec parse(std::string_view name);  // "gaussian" | "rademacher" | "uniform-scaled"
  std::string name() const;

  /// K̃ = K·√(log K).
  double k_tilde() const;
};

/// m×n matrix with rows drawn iid from `spec`. Entry (i, j) is a pure
/// function of (seed, kind, i·n + j).
DenseMatrix sample_matrix(const EnsembleSpec& spec, std::size_t m, std::size_t n, RngSeed seed);

/// Average of AᵢAᵢᵀ over `trials` sampled rows of length n.
DenseMatrix empirical_row_covariance(const EnsembleSpec& spec, std::size_t n, std::size_t trials,
                                     RngSeed seed);

/// Empirical frequency of |<Aᵢ, direction>| >= t over `trials` sampled rows.
double tail_check(const EnsembleSpec& spec, std::span<const double> direction, std::size_t trials,
                  double t, RngSeed seed);

/// 2 exp(-t²/K²)
double subgaussian_tail_bound(double k, double t);

}  // namespace demix
