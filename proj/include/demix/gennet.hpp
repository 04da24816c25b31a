#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "demix/linalg.hpp"
#include "demix/rng.hpp"

namespace demix {

enum class ActivationKind { relu, sigmoid, tanh, identity };

/// Pointwise nonlinearity. Each kind is 1-Lipschitz except sigmoid (1/4).
struct Activation {
  ActivationKind kind = ActivationKind::identity;

  double lipschitz() const noexcept;
  double apply(double x) const noexcept;
  /// Derivative at pre-activation `x`; ReLU uses 0 at the kink.
  double derivative(double x) const noexcept;

  std::string name() const;
  static Activation parse(std::string_view name);

  friend bool operator==(const Activation&, const Activation&) = default;
};

struct DenseLayer {
  DenseMatrix weights;  // out × in
  Vector bias;          // out
  Activation activation;
};

/// Latent code, optionally constrained to the ball of radius `radius_bound`.
struct LatentPoint {
  Vector coords;
  std::optional<double> radius_bound;

  LatentPoint() = default;
  explicit LatentPoint(Vector c, std::optional<double> radius = std::nullopt);
};

/// Feedforward map u ↦ σ_d(W_d ··· σ_1(W_1 u + b_1) ··· + b_d). Immutable
/// after construction; evaluation is reentrant.
class GeneratorNet {
 public:
  explicit GeneratorNet(std::vector<DenseLayer> layers);

  /// Single affine layer with identity activation.
  static GeneratorNet affine(DenseMatrix weights, Vector bias = {});
  static GeneratorNet identity(std::size_t dim);
  static GeneratorNet zero(std::size_t latent_dim, std::size_t output_dim);

  std::size_t latent_dim() const noexcept { return layers_.front().weights.cols(); }
  std::size_t output_dim() const noexcept { return layers_.back().weights.rows(); }
  std::size_t depth() const noexcept { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  /// True when every activation is the identity, i.e. the net is affine.
  bool is_affine() const noexcept;

  Vector forward(std::span<const double> u) const;

  /// Vector-Jacobian product Jᵀ·cotangent with J the Jacobian of forward at u.
  Vector latent_gradient(std::span<const double> u, std::span<const double> cotangent) const;

  /// ∏ σmax(W_i)·lip(σ_i), an upper bound on the Lipschitz constant.
  double lipschitz_bound() const;

  std::optional<double> lipschitz_hint;

 private:
  std::vector<DenseLayer> layers_;
};

/// Appends exact identity layers (weights I, bias 0) using the given
/// activations until the net has `activations.size()` extra layers. A padded
/// layer is exact when its activation is the identity, or ReLU applied to an
/// output that is already non-negative; anything else throws StructuralError.
GeneratorNet pad_with_identity_layers(const GeneratorNet& net, std::span<const Activation> activations);

enum class MergeMode { sum, stack };

/// Block-diagonal merge of g: ℝᵏ→ℝⁿ and h: ℝᵏ'→ℝⁿ' into one net on ℝᵏ⁺ᵏ'.
/// `stack` yields w = (u, v) ↦ (g(u), h(v)); `sum` appends a final [I I] layer
/// so w ↦ g(u) + h(v). The shallower net is padded first.
GeneratorNet merge_block_diag(const GeneratorNet& g, const GeneratorNet& h, MergeMode mode);

/// Random dense net with layer widths `dims` (dims[0] = latent dim) and the
/// given per-layer activations. Weights are iid N(0, weight_scale²/fan_in),
/// biases iid N(0, bias_scale²).
GeneratorNet random_dense_net(std::span<const std::size_t> dims,
                              std::span<const Activation> activations, RngSeed seed,
                              double weight_scale = 1.0, double bias_scale = 0.0);

// Interchange format, format_version 1.
nlohmann::json weights_to_json(const GeneratorNet& net);
GeneratorNet weights_from_json(const nlohmann::json& doc);
void save_weights(const GeneratorNet& net, const std::filesystem::path& path);
GeneratorNet load_weights(const std::filesystem::path& path);

/// Trainer-written parity fixture: latents and the trainer's own forward
/// outputs. Returns the largest absolute deviation of `net` from them.
struct ParityReport {
  double max_abs_error = 0.0;
  double tolerance = 1e-5;
  std::size_t cases = 0;
  bool passed() const noexcept { return max_abs_error <= tolerance; }
};
ParityReport check_parity(const GeneratorNet& net, const std::filesystem::path& parity_path);

}  // namespace demix
