#include "demix/solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>

#include "demix/errors.hpp"
#include "demix/io.hpp"

namespace demix {

void SolverConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (iterations == 0) throw std::invalid_argument("iterations must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in [0, 1)");
  if (!(epsilon_hat > 0.0)) throw std::invalid_argument("epsilon_hat must be positive");
  if (record_trace_every == 0) throw std::invalid_argument("record_trace_every must be positive");
  if (project_radii && !(project_radii->first > 0.0 && project_radii->second > 0.0)) {
    throw std::invalid_argument("projection radii must be positive");
  }
}

InitScheme InitScheme::random() { return {}; }

InitScheme InitScheme::provided(Vector u0, Vector v0) {
  InitScheme s;
  s.kind = InitKind::provided;
  s.provided_latents = std::make_pair(std::move(u0), std::move(v0));
  return s;
}

InitScheme InitScheme::encoder(GeneratorNet eg, GeneratorNet eh, double noise_scale) {
  InitScheme s;
  s.kind = InitKind::encoder_perturbed;
  s.noise_scale = noise_scale;
  s.encoders = std::make_pair(std::move(eg), std::move(eh));
  return s;
}

void InitScheme::validate() const {
  if (kind == InitKind::encoder_perturbed && !encoders) {
    throw std::invalid_argument("encoder-perturbed initialization requires encoders");
  }
  if (kind == InitKind::provided && !provided_latents) {
    throw std::invalid_argument("provided initialization requires latents");
  }
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("noise_scale must be non-negative");
}

std::pair<Vector, Vector> initialize(const InitScheme& scheme, std::span<const double> mixture,
                                     std::size_t latent_u, std::size_t latent_v, RngSeed seed) {
  scheme.validate();
  RngStream rng(seed);
  switch (scheme.kind) {
    case InitKind::random_normal: {
      Vector u(latent_u), v(latent_v);
      for (double& x : u) x = rng.normal();
      for (double& x : v) x = rng.normal();
      return {std::move(u), std::move(v)};
    }
    case InitKind::encoder_perturbed: {
      Vector u = scheme.encoders->first.forward(mixture);
      Vector v = scheme.encoders->second.forward(mixture);
      if (u.size() != latent_u || v.size() != latent_v) {
        throw DimensionError("encoder output dims do not match generator latent dims");
      }
      if (scheme.noise_scale != 0.0) {
        for (double& x : u) x += scheme.noise_scale * rng.normal();
        for (double& x : v) x += scheme.noise_scale * rng.normal();
      }
      return {std::move(u), std::move(v)};
    }
    case InitKind::provided: {
      const auto& [u, v] = *scheme.provided_latents;
      if (u.size() != latent_u || v.size() != latent_v) {
        throw DimensionError("provided latents do not match generator latent dims");
      }
      return {u, v};
    }
  }
  throw std::logic_error("unreachable");
}

std::pair<Vector, Vector> initialize(const InitScheme& scheme, const DemixProblem& problem, RngSeed seed) {
  return initialize(scheme, problem.b(), problem.g().latent_dim(), problem.h().latent_dim(), seed);
}

namespace {

void project_onto_ball(Vector& w, double radius) {
  const double nw = norm2(w);
  if (nw > radius) {
    const double s = radius / nw;
    for (double& x : w) x *= s;
  }
}

struct RunOutcome {
  bool diverged = false;
  Vector u, v;
  double best_loss = 0.0;
  double initial_loss = 0.0;
  std::vector<TracePoint> trace;
};

class AdamState {
 public:
  AdamState(std::size_t dim, const SolverConfig& c) : cfg_(c), m_(dim, 0.0), v_(dim, 0.0) {}

  void step(Vector& w, std::span<const double> grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      w[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon_hat);
    }
  }

 private:
  const SolverConfig& cfg_;
  Vector m_, v_;
  std::size_t t_ = 0;
};

RunOutcome run_adam(const LatentObjective& obj, Vector u, Vector v, const SolverConfig& cfg) {
  RunOutcome out;
  if (cfg.project_radii) {
    project_onto_ball(u, cfg.project_radii->first);
    project_onto_ball(v, cfg.project_radii->second);
  }
  LossAndGradient cur = obj.eval(u, v);
  if (!std::isfinite(cur.loss)) {
    out.diverged = true;
    return out;
  }
  out.initial_loss = cur.loss;
  out.best_loss = cur.loss;
  out.u = u;
  out.v = v;
  out.trace.push_back({0, cur.loss});

  AdamState adam_u(u.size(), cfg), adam_v(v.size(), cfg);
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    adam_u.step(u, cur.grad_u);
    adam_v.step(v, cur.grad_v);
    if (cfg.project_radii) {
      project_onto_ball(u, cfg.project_radii->first);
      project_onto_ball(v, cfg.project_radii->second);
    }
    cur = obj.eval(u, v);
    if (!std::isfinite(cur.loss)) {
      out.diverged = true;
      return out;
    }
    if (cur.loss < out.best_loss) {
      out.best_loss = cur.loss;
      out.u = u;
      out.v = v;
    }
    if (it % cfg.record_trace_every == 0 || it == cfg.iterations) out.trace.push_back({it, cur.loss});
  }
  return out;
}

}  // namespace

RecoveryResult minimize_latents(const LatentObjective& obj, std::span<const double> mixture,
                                const SolverConfig& cfg, const InitScheme& init) {
  cfg.validate();
  init.validate();
  std::optional<RunOutcome> best;
  RngSeed best_seed{};
  std::size_t diverged = 0;
  for (std::size_t j = 0; j <= cfg.restarts; ++j) {
    const RngSeed s{cfg.seed.seed, cfg.seed.stream + j};
    auto [u0, v0] = initialize(init, mixture, obj.ku, obj.kv, s);
    RunOutcome run = run_adam(obj, std::move(u0), std::move(v0), cfg);
    if (run.diverged) {
      ++diverged;
      continue;
    }
    if (!best || run.best_loss < best->best_loss) {
      best = std::move(run);
      best_seed = s;
    }
  }
  if (!best) throw DivergenceError("all " + std::to_string(cfg.restarts + 1) + " restarts diverged");

  RecoveryResult r;
  const auto radius = [&](bool first) -> std::optional<double> {
    if (!cfg.project_radii) return std::nullopt;
    return first ? cfg.project_radii->first : cfg.project_radii->second;
  };
  r.u_hat = LatentPoint(best->u, radius(true));
  r.v_hat = LatentPoint(best->v, radius(false));
  r.final_loss = best->best_loss;
  r.initial_loss = best->initial_loss;
  r.loss_trace = std::move(best->trace);
  r.seed = best_seed;
  r.diverged_restarts = diverged;
  return r;
}

namespace {

// Affine net F(w) = M w + c, returned as (M, c).
std::pair<DenseMatrix, Vector> compose_affine(const GeneratorNet& f) {
  if (!f.is_affine()) throw std::invalid_argument("generator is not affine");
  DenseMatrix m = DenseMatrix::identity(f.latent_dim());
  Vector c(f.latent_dim(), 0.0);
  for (const auto& layer : f.layers()) {
    const auto& w = layer.weights;
    DenseMatrix next(w.rows(), m.cols());
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t k = 0; k < w.cols(); ++k) {
        const double wik = w(i, k);
        if (wik == 0.0) continue;
        for (std::size_t j = 0; j < m.cols(); ++j) next(i, j) += wik * m(k, j);
      }
    Vector nc = matvec(w, c);
    for (std::size_t i = 0; i < nc.size(); ++i) nc[i] += layer.bias[i];
    m = std::move(next);
    c = std::move(nc);
  }
  return {std::move(m), std::move(c)};
}

// Φ·F(w) ≈ b with F a single net on w = (u, v).
LatentObjective sensing_objective(std::span<const double> b, const DenseMatrix& phi, const GeneratorNet& f,
                                  std::size_t ku) {
  if (phi.cols() != f.output_dim()) {
    throw DimensionError("sensing matrix has " + std::to_string(phi.cols()) + " columns, generator outputs " +
                         std::to_string(f.output_dim()));
  }
  if (b.size() != phi.rows()) throw DimensionError("measurement length does not match sensing matrix rows");
  LatentObjective obj;
  obj.ku = ku;
  obj.kv = f.latent_dim() - ku;
  obj.eval = [b = Vector(b.begin(), b.end()), &phi, &f, ku](std::span<const double> u,
                                                            std::span<const double> v) {
    const Vector w = concat(u, v);
    Vector rho = matvec(phi, f.forward(w));
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] -= b[i];
    const double m = static_cast<double>(rho.size());
    LossAndGradient out;
    out.loss = squared_norm(rho) / m;
    Vector gw = f.latent_gradient(w, matvec_transposed(phi, rho));
    for (double& d : gw) d *= 2.0 / m;
    out.grad_u.assign(gw.begin(), gw.begin() + static_cast<std::ptrdiff_t>(ku));
    out.grad_v.assign(gw.begin() + static_cast<std::ptrdiff_t>(ku), gw.end());
    return out;
  };
  return obj;
}

}  // namespace

double affine_least_squares_minimum(std::span<const double> b, const DenseMatrix& phi, const GeneratorNet& f) {
  auto [m, c] = compose_affine(f);
  if (phi.cols() != m.rows() || b.size() != phi.rows()) throw DimensionError("least squares: shape mismatch");
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> ephi(
      phi.data().data(), static_cast<Eigen::Index>(phi.rows()), static_cast<Eigen::Index>(phi.cols()));
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> em(
      m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  const Eigen::Map<const Eigen::VectorXd> ec(c.data(), static_cast<Eigen::Index>(c.size()));
  const Eigen::Map<const Eigen::VectorXd> eb(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::MatrixXd design = ephi * em;
  const Eigen::VectorXd target = eb - ephi * ec;
  const Eigen::VectorXd w = design.completeOrthogonalDecomposition().solve(target);
  return (design * w - target).squaredNorm() / static_cast<double>(b.size());
}

RecoveryResult solve(const DemixProblem& problem, const SolverConfig& config, const InitScheme& init) {
  LatentObjective obj;
  obj.ku = problem.g().latent_dim();
  obj.kv = problem.h().latent_dim();
  obj.eval = [&problem](std::span<const double> u, std::span<const double> v) {
    return loss_gradient(problem, u, v);
  };
  RecoveryResult r = minimize_latents(obj, problem.b(), config, init);
  r.x_hat = problem.g().forward(r.u_hat.coords);
  r.y_hat = problem.h().forward(r.v_hat.coords);

  if (const auto& truth = problem.truth()) {
    const double n = static_cast<double>(problem.op().n());
    const double m = static_cast<double>(problem.op().m());
    r.mse_x = std::pow(distance(r.x_hat, truth->x), 2) / n;
    r.mse_y = std::pow(distance(r.y_hat, truth->y), 2) / m;
    r.mse_mixture = r.final_loss;
    const Vector zs = concat(truth->x, truth->y);
    const Vector zh = concat(r.x_hat, r.y_hat);
    const double nz = norm2(zs);
    r.relative_error = nz > 0.0 ? distance(zh, zs) / nz : distance(zh, zs);
  }
  if (problem.g().is_affine() && problem.h().is_affine() && !config.project_radii) {
    const DenseMatrix b_full =
        hconcat(problem.op().a(), DenseMatrix::identity(problem.op().m(), problem.op().scale()));
    const GeneratorNet stacked = merge_block_diag(problem.g(), problem.h(), MergeMode::stack);
    r.achieved_suboptimality = r.final_loss - affine_least_squares_minimum(problem.b(), b_full, stacked);
  }
  return r;
}

RecoveryResult solve_one_matrix_variant(std::span<const double> b1, const DenseMatrix& phi, const GeneratorNet& g,
                                        const GeneratorNet& h, const SolverConfig& config,
                                        const InitScheme& init) {
  if (g.output_dim() != h.output_dim() || g.output_dim() != phi.cols()) {
    throw DimensionError("one-matrix variant needs g, h and Φ to share the signal dimension");
  }
  const GeneratorNet f = merge_block_diag(g, h, MergeMode::sum);
  const LatentObjective obj = sensing_objective(b1, phi, f, g.latent_dim());
  RecoveryResult r = minimize_latents(obj, b1, config, init);
  r.x_hat = g.forward(r.u_hat.coords);
  r.y_hat = h.forward(r.v_hat.coords);
  r.combined = f.forward(concat(r.u_hat.coords, r.v_hat.coords));
  if (f.is_affine() && !config.project_radii) {
    r.achieved_suboptimality = r.final_loss - affine_least_squares_minimum(b1, phi, f);
  }
  return r;
}

RecoveryResult solve_two_matrix_variant(std::span<const double> b2, const DenseMatrix& phi1,
                                        const DenseMatrix& phi2, const GeneratorNet& g, const GeneratorNet& h,
                                        const SolverConfig& config, const InitScheme& init) {
  if (phi1.rows() != phi2.rows()) throw DimensionError("Φ₁ and Φ₂ must have the same row count");
  if (phi1.cols() != g.output_dim() || phi2.cols() != h.output_dim()) {
    throw DimensionError("Φ₁, Φ₂ column counts must match g, h output dims");
  }
  const DenseMatrix phi = hconcat(phi1, phi2);
  const GeneratorNet f = merge_block_diag(g, h, MergeMode::stack);
  const LatentObjective obj = sensing_objective(b2, phi, f, g.latent_dim());
  RecoveryResult r = minimize_latents(obj, b2, config, init);
  r.x_hat = g.forward(r.u_hat.coords);
  r.y_hat = h.forward(r.v_hat.coords);
  if (f.is_affine() && !config.project_radii) {
    r.achieved_suboptimality = r.final_loss - affine_least_squares_minimum(b2, phi, f);
  }
  return r;
}

// ---------------------------------------------------------------------------

nlohmann::json config_to_json(const SolverConfig& c) {
  nlohmann::json doc = {{"learning_rate", c.learning_rate},
                        {"iterations", c.iterations},
                        {"beta1", c.beta1},
                        {"beta2", c.beta2},
                        {"epsilon_hat", c.epsilon_hat},
                        {"restarts", c.restarts},
                        {"seed", {{"seed", c.seed.seed}, {"stream", c.seed.stream}}},
                        {"record_trace_every", c.record_trace_every}};
  if (c.project_radii) {
    doc["project_radii"] = {c.project_radii->first, c.project_radii->second};
  } else {
    doc["project_radii"] = nullptr;
  }
  return doc;
}

SolverConfig config_from_json(const nlohmann::json& doc) {
  SolverConfig c;
  try {
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.iterations = doc.value("iterations", c.iterations);
    c.beta1 = doc.value("beta1", c.beta1);
    c.beta2 = doc.value("beta2", c.beta2);
    c.epsilon_hat = doc.value("epsilon_hat", c.epsilon_hat);
    c.restarts = doc.value("restarts", c.restarts);
    c.record_trace_every = doc.value("record_trace_every", c.record_trace_every);
    if (doc.contains("seed")) {
      c.seed.seed = doc["seed"].value("seed", std::uint64_t{0});
      c.seed.stream = doc["seed"].value("stream", std::uint64_t{0});
    }
    if (doc.contains("project_radii") && !doc["project_radii"].is_null()) {
      c.project_radii = std::make_pair(doc["project_radii"].at(0).get<double>(),
                                       doc["project_radii"].at(1).get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("$.solver", e.what());
  }
  c.validate();
  return c;
}

nlohmann::json result_to_json(const RecoveryResult& r) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& p : r.loss_trace) trace.push_back({p.iteration, p.loss});
  nlohmann::json doc = {{"u_hat", vector_to_json(r.u_hat.coords)},
                        {"v_hat", vector_to_json(r.v_hat.coords)},
                        {"x_hat", vector_to_json(r.x_hat)},
                        {"y_hat", vector_to_json(r.y_hat)},
                        {"final_loss", r.final_loss},
                        {"initial_loss", r.initial_loss},
                        {"loss_trace", std::move(trace)},
                        {"mse_x", opt(r.mse_x)},
                        {"mse_y", opt(r.mse_y)},
                        {"mse_mixture", opt(r.mse_mixture)},
                        {"relative_error", opt(r.relative_error)},
                        {"achieved_suboptimality", opt(r.achieved_suboptimality)},
                        {"winning_seed", {{"seed", r.seed.seed}, {"stream", r.seed.stream}}},
                        {"diverged_restarts", r.diverged_restarts}};
  if (r.combined) doc["combined"] = vector_to_json(*r.combined);
  return doc;
}

}  // namespace demix
