#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "demix/ensemble.hpp"
#include "demix/gennet.hpp"
#include "demix/linalg.hpp"
#include "demix/mixing.hpp"
#include "demix/rng.hpp"
#include "demix/solver.hpp"

namespace demix {

// ---------------------------------------------------------------------------
// Nets and finite sets

/// Finite η-net for the closed ball B^k(r).
struct EpsilonNet {
  std::vector<Vector> points;
  std::size_t dim = 0;
  double radius = 0.0;
  double resolution = 0.0;

  /// k·log(1 + 2r/η), the volumetric bound on log|net|.
  double cardinality_bound() const;
  double log_cardinality() const;
};

inline constexpr std::size_t kDefaultNetCap = 1'000'000;

/// Grid net: cubes of side s = 2η/√k centred on a symmetric lattice covering
/// [-r, r]^k, keeping each cube that meets the ball and projecting its centre
/// radially into B^k(r). Every ball point lies in a kept cube, within η of its
/// (projected) centre. When the grid is larger than the volumetric bound the
/// net is rebuilt by greedy η/2-thinning of the grid with spacing s/2.
/// Throws CapacityError if more than `cap` points would be needed.
EpsilonNet build_ball_net(std::size_t k, double r, double eta, std::size_t cap = kDefaultNetCap);

/// Distance from `p` to the nearest net point.
double distance_to_net(std::span<const Vector> points, std::span<const double> p);

/// Uniform sample from the ball B^k(r).
Vector sample_ball(std::size_t k, double r, RngStream& rng);

class FinitePointSet {
 public:
  explicit FinitePointSet(std::vector<Vector> points);

  const std::vector<Vector>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dim() const noexcept { return points_.front().size(); }
  double rad() const noexcept { return rad_; }
  double min_norm() const noexcept { return min_norm_; }
  /// Max pairwise distance (computed on first use).
  double diam() const;

  /// `count` distinct points chosen uniformly without replacement.
  FinitePointSet subsample(std::size_t count, RngSeed seed) const;
  FinitePointSet scaled(double c) const;

 private:
  std::vector<Vector> points_;
  double rad_ = 0.0;
  double min_norm_ = 0.0;
  mutable std::optional<double> diam_;
};

struct ImageNet {
  FinitePointSet set;
  /// √((L_G·η_G)² + (L_H·η_H)²): the image is a δ-net for g(B)×h(B').
  double delta = 0.0;
};

/// {(g(u), h(v)) : u ∈ net_u, v ∈ net_v}, duplicates removed.
ImageNet image_net(const EpsilonNet& net_u, const EpsilonNet& net_v, const GeneratorNet& g,
                   const GeneratorNet& h, std::size_t cap = kDefaultNetCap);

// ---------------------------------------------------------------------------
// Gaussian width / complexity

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct WidthEstimates {
  McEstimate width;       // E sup <x, g>
  McEstimate complexity;  // E sup |<x, g>|
};

/// Both estimates from the same `samples` Gaussian draws.
WidthEstimates gaussian_width_and_complexity_mc(const FinitePointSet& set, std::size_t samples, RngSeed seed);
McEstimate gaussian_width_mc(const FinitePointSet& set, std::size_t samples, RngSeed seed);
McEstimate gaussian_complexity_mc(const FinitePointSet& set, std::size_t samples, RngSeed seed);

// ---------------------------------------------------------------------------
// Deviation inequality

struct DeviationReport {
  std::vector<double> sup_deviation_samples;  // sup_z |X_z|, one per draw of A
  McEstimate gamma_estimate;
  McEstimate width_estimate;
  double rad = 0.0;
  double t = 0.0;
  double k_tilde = 0.0;
  double quantile_level = 0.0;  // 1 − e^{−t²}
  double quantile = 0.0;
  double bound_value = 0.0;         // K̃(γ̂ + t·rad)
  double empirical_constant = 0.0;  // quantile / (γ̂ + t·rad) / K̃
  /// Expectation form: mean(sup) / (K̃·γ̂). Reported separately from the tail
  /// form.
  double expectation_constant = 0.0;
};

/// `set` lives in ℝⁿ⁺ᵐ; each of `trials` independent m×n draws of A gives one
/// sample of sup_z |X_z|.
DeviationReport deviation_experiment(const EnsembleSpec& spec, const FinitePointSet& set, std::size_t m,
                                     std::size_t n, std::size_t trials, double t, RngSeed seed,
                                     std::size_t gamma_samples = 20000);

/// Type-7 (linear interpolation) empirical quantile.
double empirical_quantile(std::vector<double> values, double level);

// ---------------------------------------------------------------------------
// S-REC

struct SrecReport {
  double gamma = 0.0;
  double delta = 0.0;
  /// min over pairs of ‖B(z₁−z₂)‖/√m − γ‖z₁−z₂‖ + δ.
  double min_margin = 0.0;
  std::pair<std::size_t, std::size_t> argmin_pair{0, 0};
  std::size_t pair_count = 0;
  std::optional<RngSeed> subsample_seed;

  bool holds() const noexcept { return min_margin >= 0.0; }
};

inline constexpr std::size_t kDefaultPairCap = 10'000'000;

/// Exhaustive over all unordered pairs. Throws CapacityError when the pair
/// count exceeds `pair_cap`; use srec_check_subsampled then.
SrecReport srec_check(const MixingOperator& op, const FinitePointSet& set, double gamma, double delta,
                      std::size_t pair_cap = kDefaultPairCap);
SrecReport srec_check_subsampled(const MixingOperator& op, const FinitePointSet& set, double gamma, double delta,
                                 std::size_t pairs, RngSeed seed);

// ---------------------------------------------------------------------------
// Recovery phase experiment

struct PhaseConfig {
  std::vector<std::size_t> m_list;
  std::size_t k = 8;
  std::size_t k_prime = 8;
  std::size_t n = 100;
  std::string n_rule = "fixed";  // "fixed" | "equal-m"
  std::size_t hidden = 32;
  Activation output_activation{ActivationKind::identity};
  EnsembleSpec ensemble = EnsembleSpec::of(EnsembleKind::gaussian);
  std::uint64_t generator_seed = 1;
  std::uint64_t truth_seed = 2;
  std::uint64_t matrix_seed = 3;
  std::uint64_t noise_seed = 4;
  /// ‖η‖₂ for each noise level; η has a fixed random direction per instance.
  std::vector<double> noise_levels{0.0};
  std::size_t instances = 10;
  SolverConfig solver{};
  double success_threshold = 0.05;
  /// Paired comparisons where both relative errors are below this count as
  /// ties in the sign test.
  double tie_floor = 1e-3;
};

struct PhaseRow {
  std::size_t m = 0;
  double noise = 0.0;
  double median_relative_error = 0.0;
  double median_absolute_error = 0.0;
  double success_rate = 0.0;
  std::vector<double> relative_errors;  // per instance
  std::vector<double> absolute_errors;
};

struct MonotoneCheck {
  double noise = 0.0;
  std::size_t decreases = 0;
  std::size_t increases = 0;
  std::size_t ties = 0;
  double p_value = 1.0;  // one-sided sign test, H₀: P(decrease) = 1/2
};

struct PhaseTable {
  std::vector<PhaseRow> rows;
  std::vector<MonotoneCheck> monotone;
};

PhaseTable phase_experiment(const PhaseConfig& config);

/// P(Binomial(n, 1/2) ≥ k).
double sign_test_p_value(std::size_t k, std::size_t n);

/// Random two-layer generator ℝᵏ → ℝ^hidden (relu) → ℝᵒᵘᵗ with He-scaled
/// weights and small biases.
GeneratorNet random_two_layer_relu(std::size_t k, std::size_t hidden, std::size_t out, RngSeed seed,
                                   Activation output_activation = {ActivationKind::identity});

nlohmann::json deviation_report_to_json(const DeviationReport& r);
nlohmann::json srec_report_to_json(const SrecReport& r);
nlohmann::json phase_table_to_json(const PhaseTable& t);
PhaseConfig phase_config_from_json(const nlohmann::json& doc);
nlohmann::json phase_config_to_json(const PhaseConfig& c);

}  // namespace demix
