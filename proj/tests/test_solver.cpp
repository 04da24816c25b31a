#include <doctest.h>

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "demix/conclab.hpp"
#include "demix/ensemble.hpp"
#include "demix/errors.hpp"
#include "demix/solver.hpp"
#include "support.hpp"

using namespace demix;

namespace {

DemixProblem relu_instance(std::size_t m, std::size_t n, std::uint64_t seed) {
  const GeneratorNet g = random_two_layer_relu(8, 32, n, {seed, 0});
  const GeneratorNet h = random_two_layer_relu(8, 32, m, {seed, 1});
  RngStream rng({seed, 2});
  Vector u(8), v(8);
  for (double& x : u) x = rng.normal();
  for (double& x : v) x = rng.normal();
  return DemixProblem::planted(MixingOperator(sample_matrix(EnsembleSpec::of(EnsembleKind::gaussian), m, n,
                                                            {seed, 3})),
                               g, h, u, v);
}

DemixProblem tanh_instance(std::uint64_t seed) {
  const std::size_t dg[] = {3, 10, 20}, dh[] = {2, 10, 30};
  const Activation acts[] = {{ActivationKind::tanh}, {ActivationKind::identity}};
  const GeneratorNet g = random_dense_net(dg, acts, {seed, 0}, 1.0, 0.1);
  const GeneratorNet h = random_dense_net(dh, acts, {seed, 1}, 1.0, 0.1);
  testing::Draw d(seed);
  return DemixProblem::planted(
      MixingOperator(sample_matrix(EnsembleSpec::of(EnsembleKind::gaussian), 30, 20, {seed, 2})), g, h,
      d.vec(3), d.vec(2), d.vec(30));
}

Eigen::VectorXd lstsq(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  return a.colPivHouseholderQr().solve(b);
}

}  // namespace

TEST_CASE("config and init validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.beta2 = 1.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.epsilon_hat = 0.0;
  CHECK_THROWS(c.validate());
  InitScheme s;
  s.kind = InitKind::encoder_perturbed;
  CHECK_THROWS(s.validate());
  s.kind = InitKind::provided;
  CHECK_THROWS(s.validate());

  c = {};
  c.project_radii = std::make_pair(2.0, 3.0);
  c.seed = {5, 6};
  c.restarts = 3;
  const SolverConfig back = config_from_json(config_to_json(c));
  CHECK(back.project_radii == c.project_radii);
  CHECK(back.seed == c.seed);
  CHECK(back.restarts == 3);
}

TEST_CASE("initialize") {
  testing::Draw d(1);
  const Vector b = d.vec(6);
  SUBCASE("provided is returned verbatim") {
    const Vector u0 = d.vec(3), v0 = d.vec(2);
    const auto [u, v] = initialize(InitScheme::provided(u0, v0), b, 3, 2, {1, 0});
    CHECK(u == u0);
    CHECK(v == v0);
    CHECK_THROWS_AS(initialize(InitScheme::provided(u0, v0), b, 4, 2, {1, 0}), DimensionError);
  }
  SUBCASE("encoder without noise is the encoder output") {
    const GeneratorNet eg = GeneratorNet::affine(d.mat(3, 6)), eh = GeneratorNet::affine(d.mat(2, 6));
    const auto [u, v] = initialize(InitScheme::encoder(eg, eh, 0.0), b, 3, 2, {1, 0});
    CHECK(u == eg.forward(b));
    CHECK(v == eh.forward(b));
    const auto [u1, v1] = initialize(InitScheme::encoder(eg, eh, 0.1), b, 3, 2, {1, 0});
    CHECK(distance(u1, u) > 0.0);
    CHECK(distance(u1, u) < 1.0);
  }
  SUBCASE("random normal moments over many seeds") {
    const std::size_t seeds = 100000;
    std::vector<double> sum(8, 0.0), sq(8, 0.0);
    for (std::size_t s = 0; s < seeds; ++s) {
      const auto [u, v] = initialize(InitScheme::random(), b, 8, 1, {9, s});
      for (std::size_t i = 0; i < 8; ++i) {
        sum[i] += u[i];
        sq[i] += u[i] * u[i];
      }
    }
    for (std::size_t i = 0; i < 8; ++i) {
      const double mean = sum[i] / seeds;
      CHECK(std::abs(mean) <= 0.02);
      CHECK(std::abs(sq[i] / seeds - mean * mean - 1.0) <= 0.02);
    }
  }
}

TEST_CASE("solve from the truth stays there") {
  const DemixProblem p = relu_instance(60, 50, 3);
  const RecoveryResult r = solve(p, {}, InitScheme::provided(p.truth()->u, p.truth()->v));
  CHECK(r.final_loss <= 1e-12);
  CHECK(testing::max_abs_diff(r.u_hat.coords, p.truth()->u) <= 1e-6);
  CHECK(testing::max_abs_diff(r.v_hat.coords, p.truth()->v) <= 1e-6);
}

TEST_CASE("linear invertible generator against least squares") {
  testing::Draw d(2);
  const std::size_t k = 6;
  Eigen::MatrixXd gm = Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index i = 0; i < gm.rows(); ++i)
    for (Eigen::Index j = 0; j < gm.cols(); ++j) gm(i, j) += 0.2 * d.normal();
  std::vector<double> data;
  for (Eigen::Index i = 0; i < gm.rows(); ++i)
    for (Eigen::Index j = 0; j < gm.cols(); ++j) data.push_back(gm(i, j));
  const GeneratorNet g = GeneratorNet::affine(DenseMatrix(k, k, data));
  const DemixProblem p(d.vec(k), MixingOperator(DenseMatrix::identity(k)), g, GeneratorNet::zero(2, k));
  SolverConfig c;
  c.iterations = 5000;
  const RecoveryResult r = solve(p, c, InitScheme::random());
  const Eigen::VectorXd u = lstsq(gm, testing::to_eigen(p.b()));
  const Eigen::VectorXd x = gm * u;
  const Vector xs(x.data(), x.data() + x.size());
  CHECK(testing::rel_diff(r.x_hat, xs) <= 1e-3);
  REQUIRE(r.achieved_suboptimality);
  CHECK(*r.achieved_suboptimality >= -1e-12);
  CHECK(*r.achieved_suboptimality <= 1e-6);
}

TEST_CASE("random relu generators are recovered from m = n = 100") {
  SolverConfig c;
  c.restarts = 4;
  int good = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DemixProblem p = relu_instance(100, 100, 1000 + s);
    c.seed = {s, 0};
    const RecoveryResult r = solve(p, c, InitScheme::random());
    good += *r.relative_error <= 0.05 ? 1 : 0;
  }
  MESSAGE(good << "/20 instances recovered to 5%");
  CHECK(good >= 18);
}

TEST_CASE("result invariants") {
  const DemixProblem p = tanh_instance(4);
  SolverConfig c;
  c.iterations = 300;
  c.record_trace_every = 7;
  const RecoveryResult r = solve(p, c, InitScheme::random());
  CHECK(r.x_hat == p.g().forward(r.u_hat.coords));
  CHECK(r.y_hat == p.h().forward(r.v_hat.coords));
  CHECK(std::abs(r.final_loss - loss(p, r.u_hat.coords, r.v_hat.coords)) <= 1e-12);
  CHECK(r.final_loss <= r.initial_loss);
  REQUIRE(r.loss_trace.size() >= 2);
  CHECK(r.loss_trace.front().iteration == 0);
  CHECK(r.loss_trace.back().iteration == 300);
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i) {
    CHECK(r.loss_trace[i].iteration > r.loss_trace[i - 1].iteration);
  }
  CHECK(r.mse_x.has_value());
  CHECK(r.mse_mixture == r.final_loss);
  CHECK_FALSE(r.achieved_suboptimality.has_value());
}

TEST_CASE("determinism and restart dominance") {
  const DemixProblem p = relu_instance(40, 30, 5);
  SolverConfig c;
  c.iterations = 200;
  c.seed = {77, 0};
  const RecoveryResult a = solve(p, c, InitScheme::random());
  const RecoveryResult b = solve(p, c, InitScheme::random());
  CHECK(a.final_loss == b.final_loss);
  CHECK(a.u_hat.coords == b.u_hat.coords);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t restarts = 0; restarts <= 4; ++restarts) {
    c.restarts = restarts;
    const RecoveryResult r = solve(p, c, InitScheme::random());
    CHECK(r.final_loss <= prev);
    prev = r.final_loss;
  }
}

TEST_CASE("projection keeps every iterate in the balls") {
  const DemixProblem p = tanh_instance(6);
  SolverConfig c;
  c.iterations = 200;
  c.project_radii = std::make_pair(0.5, 0.25);
  LatentObjective obj;
  obj.ku = 3;
  obj.kv = 2;
  std::size_t evaluations = 0;
  bool inside = true;
  obj.eval = [&](std::span<const double> u, std::span<const double> v) {
    ++evaluations;
    inside = inside && norm2(u) <= 0.5 * (1 + 1e-12) && norm2(v) <= 0.25 * (1 + 1e-12);
    return loss_gradient(p, u, v);
  };
  const RecoveryResult r = minimize_latents(obj, p.b(), c, InitScheme::random());
  CHECK(evaluations == 201);
  CHECK(inside);
  CHECK(r.u_hat.radius_bound == 0.5);
  CHECK(solve(p, c, InitScheme::random()).final_loss == r.final_loss);
}

TEST_CASE("divergence") {
  LatentObjective obj;
  obj.ku = 1;
  obj.kv = 1;
  obj.eval = [](std::span<const double>, std::span<const double>) {
    return LossAndGradient{std::numeric_limits<double>::quiet_NaN(), {0.0}, {0.0}};
  };
  SolverConfig c;
  c.restarts = 2;
  CHECK_THROWS_AS(minimize_latents(obj, Vector{}, c, InitScheme::random()), DivergenceError);

  // Restarts whose start lies right of zero blow up; the others survive.
  obj.eval = [](std::span<const double> u, std::span<const double>) {
    const double l = u[0] > 0.0 ? std::numeric_limits<double>::infinity() : u[0] * u[0];
    return LossAndGradient{l, {2.0 * u[0]}, {0.0}};
  };
  c.restarts = 9;
  c.iterations = 5;
  const RecoveryResult r = minimize_latents(obj, Vector{}, c, InitScheme::random());
  CHECK(r.diverged_restarts > 0);
  CHECK(r.diverged_restarts < 10);
}

TEST_CASE("gradient vanishes at convergence on smooth problems") {
  const DemixProblem p = tanh_instance(8);
  SolverConfig c;
  c.iterations = 5000;
  c.learning_rate = 1e-2;
  const RecoveryResult r = solve(p, c, InitScheme::random());
  const auto lg = loss_gradient(p, r.u_hat.coords, r.v_hat.coords);
  const double gnorm = std::hypot(testing::l2(lg.grad_u), testing::l2(lg.grad_v));
  MESSAGE("gradient norm " << gnorm << " at loss " << r.final_loss);
  CHECK(gnorm <= 1e-3 * (1.0 + r.final_loss));
}

TEST_CASE("one-matrix variant") {
  testing::Draw d(10);
  SUBCASE("symmetric truth: the sum is recovered") {
    const GeneratorNet g = random_two_layer_relu(4, 16, 40, {3, 0});
    const Vector u = d.vec(4);
    const DenseMatrix phi = sample_matrix(EnsembleSpec::of(EnsembleKind::gaussian), 60, 40, {3, 1});
    Vector s = g.forward(u);
    for (double& x : s) x *= 2.0;
    const Vector b = matvec(phi, s);
    SolverConfig c;
    c.restarts = 4;
    const RecoveryResult r = solve_one_matrix_variant(b, phi, g, g, c, InitScheme::random());
    REQUIRE(r.combined);
    CHECK(testing::rel_diff(*r.combined, s) <= 1e-2);
    // Components are only determined up to a split of the sum.
    Vector parts(40);
    for (std::size_t i = 0; i < 40; ++i) parts[i] = r.x_hat[i] + r.y_hat[i];
    CHECK(testing::max_abs_diff(parts, *r.combined) <= 1e-12);
  }
  SUBCASE("identity sensing with linear F matches least squares") {
    const DenseMatrix gm = d.mat(10, 3), hm = d.mat(10, 2);
    const Vector b = d.vec(10);
    const RecoveryResult r = solve_one_matrix_variant(b, DenseMatrix::identity(10), GeneratorNet::affine(gm),
                                                      GeneratorNet::affine(hm), {}, InitScheme::random());
    Eigen::MatrixXd m(10, 5);
    m << testing::to_eigen(gm), testing::to_eigen(hm);
    const Eigen::VectorXd fit = m * lstsq(m, testing::to_eigen(b));
    const Vector f(fit.data(), fit.data() + 10);
    CHECK(testing::rel_diff(*r.combined, f) <= 1e-3);
    CHECK(*r.achieved_suboptimality <= 1e-6);
  }
  SUBCASE("start at the truth") {
    const GeneratorNet g = random_two_layer_relu(3, 8, 12, {4, 0}), h = random_two_layer_relu(3, 8, 12, {4, 1});
    const Vector u = d.vec(3), v = d.vec(3);
    const DenseMatrix phi = d.mat(20, 12);
    Vector s = g.forward(u);
    const Vector hv = h.forward(v);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += hv[i];
    const RecoveryResult r =
        solve_one_matrix_variant(matvec(phi, s), phi, g, h, {}, InitScheme::provided(u, v));
    CHECK(r.final_loss <= 1e-20);
  }
}

TEST_CASE("two-matrix variant") {
  testing::Draw d(11);
  SUBCASE("phi2 = 0 decouples") {
    const GeneratorNet g = random_two_layer_relu(3, 12, 15, {5, 0}), h = random_two_layer_relu(2, 12, 9, {5, 1});
    const DenseMatrix phi1 = d.mat(25, 15);
    const Vector b = matvec(phi1, g.forward(d.vec(3)));
    SolverConfig c;
    c.iterations = 400;
    const RecoveryResult r = solve_two_matrix_variant(b, phi1, DenseMatrix(25, 9), g, h, c, InitScheme::random());
    // Same run on the single-signal objective.
    LatentObjective single;
    single.ku = 3;
    single.kv = 2;
    single.eval = [&](std::span<const double> u, std::span<const double>) {
      Vector rho = matvec(phi1, g.forward(u));
      for (std::size_t i = 0; i < rho.size(); ++i) rho[i] -= b[i];
      LossAndGradient out{squared_norm(rho) / 25.0, g.latent_gradient(u, matvec_transposed(phi1, rho)), {0.0, 0.0}};
      for (double& x : out.grad_u) x *= 2.0 / 25.0;
      return out;
    };
    const RecoveryResult s = minimize_latents(single, b, c, InitScheme::random());
    CHECK(testing::max_abs_diff(r.u_hat.coords, s.u_hat.coords) <= 1e-10);
    CHECK(r.final_loss == doctest::Approx(s.final_loss).epsilon(1e-10));
  }
  SUBCASE("gaussian matrices and linear generators against stacked least squares") {
    const std::size_t m = 30;
    const auto spec = EnsembleSpec::of(EnsembleKind::gaussian);
    const auto scale = [&](DenseMatrix a) {
      Vector v = a.data();
      for (double& x : v) x /= std::sqrt(double(m));
      return DenseMatrix(a.rows(), a.cols(), v);
    };
    const DenseMatrix phi1 = scale(sample_matrix(spec, m, 12, {6, 0})), phi2 = scale(sample_matrix(spec, m, 10, {6, 1}));
    const DenseMatrix gm = d.mat(12, 3), hm = d.mat(10, 2);
    const Vector b = d.vec(m);
    const RecoveryResult r = solve_two_matrix_variant(b, phi1, phi2, GeneratorNet::affine(gm),
                                                      GeneratorNet::affine(hm), {}, InitScheme::random());
    Eigen::MatrixXd design(m, 5);
    design << testing::to_eigen(phi1) * testing::to_eigen(gm), testing::to_eigen(phi2) * testing::to_eigen(hm);
    const Eigen::VectorXd w = lstsq(design, testing::to_eigen(b));
    const Vector xs = matvec(gm, Vector(w.data(), w.data() + 3));
    const Vector ys = matvec(hm, Vector(w.data() + 3, w.data() + 5));
    CHECK(testing::rel_diff(concat(r.x_hat, r.y_hat), concat(xs, ys)) <= 1e-3);
  }
  SUBCASE("start at the truth") {
    const GeneratorNet g = random_two_layer_relu(3, 8, 12, {7, 0}), h = random_two_layer_relu(2, 8, 6, {7, 1});
    const Vector u = d.vec(3), v = d.vec(2);
    const DenseMatrix p1 = d.mat(15, 12), p2 = d.mat(15, 6);
    Vector b = matvec(p1, g.forward(u));
    const Vector hv = matvec(p2, h.forward(v));
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += hv[i];
    const RecoveryResult r = solve_two_matrix_variant(b, p1, p2, g, h, {}, InitScheme::provided(u, v));
    CHECK(r.final_loss <= 1e-20);
  }
  CHECK_THROWS_AS(solve_two_matrix_variant(Vector(3, 0.0), d.mat(3, 2), d.mat(4, 2), GeneratorNet::identity(2),
                                           GeneratorNet::identity(2), {}, InitScheme::random()),
                  DimensionError);
}
