#include "demix/demo.hpp"

#include <algorithm>
#include <string>

#include "demix/errors.hpp"

namespace demix {

Vector clip_unit(std::span<const double> v) {
  Vector out(v.begin(), v.end());
  for (double& x : out) x = std::clamp(x, 0.0, 1.0);
  return out;
}

Vector clipped_mixture(const DenseMatrix& phi, std::span<const double> x8, std::span<const double> x1) {
  if (phi.rows() != x1.size() || phi.cols() != x8.size()) {
    throw DimensionError("mixture: Φ is " + std::to_string(phi.rows()) + "x" + std::to_string(phi.cols()) +
                         ", images have " + std::to_string(x8.size()) + " and " + std::to_string(x1.size()) +
                         " pixels");
  }
  Vector b = matvec(phi, x8);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += x1[i];
  return clip_unit(b);
}

namespace {

double pixel_mse(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

ImageDemixResult demix_images(std::span<const double> b, const DenseMatrix& phi, const GeneratorNet& decoder8,
                              const GeneratorNet& decoder1, const SolverConfig& config, const InitScheme& init,
                              std::span<const double> x8_true, std::span<const double> x1_true) {
  if (decoder8.output_dim() != phi.cols() || decoder1.output_dim() != phi.rows() || b.size() != phi.rows()) {
    throw DimensionError("demix_images: decoder outputs, Φ and the mixture do not agree in size");
  }
  LatentObjective obj;
  obj.ku = decoder8.latent_dim();
  obj.kv = decoder1.latent_dim();
  obj.eval = [b = Vector(b.begin(), b.end()), &phi, &decoder8, &decoder1](std::span<const double> u,
                                                                         std::span<const double> v) {
    Vector pred = matvec(phi, decoder8.forward(u));
    const Vector y = decoder1.forward(v);
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = std::clamp(pred[i] + y[i], 0.0, 1.0) - b[i];
    const double m = static_cast<double>(pred.size());
    LossAndGradient out;
    out.loss = squared_norm(pred) / m;
    out.grad_u = decoder8.latent_gradient(u, matvec_transposed(phi, pred));
    out.grad_v = decoder1.latent_gradient(v, pred);
    for (double& d : out.grad_u) d *= 2.0 / m;
    for (double& d : out.grad_v) d *= 2.0 / m;
    return out;
  };

  ImageDemixResult r;
  r.recovery = minimize_latents(obj, b, config, init);
  r.recovery.x_hat = decoder8.forward(r.recovery.u_hat.coords);
  r.recovery.y_hat = decoder1.forward(r.recovery.v_hat.coords);
  r.x8_hat = clip_unit(r.recovery.x_hat);
  r.x1_hat = clip_unit(r.recovery.y_hat);
  Vector mix = matvec(phi, r.recovery.x_hat);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += r.recovery.y_hat[i];
  r.mixture_hat = clip_unit(mix);
  r.mse_mixture = pixel_mse(r.mixture_hat, b);
  if (!x8_true.empty()) {
    require_same_length(x8_true, r.x8_hat, "x8");
    r.mse_x8 = pixel_mse(r.x8_hat, x8_true);
  }
  if (!x1_true.empty()) {
    require_same_length(x1_true, r.x1_hat, "x1");
    r.mse_x1 = pixel_mse(r.x1_hat, x1_true);
  }
  return r;
}

}  // namespace demix
