#include "demix/conclab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <string>

#include "demix/errors.hpp"

namespace demix {

// ---------------------------------------------------------------------------
// Nets

double EpsilonNet::cardinality_bound() const {
  return static_cast<double>(dim) * std::log1p(2.0 * radius / resolution);
}

double EpsilonNet::log_cardinality() const { return std::log(static_cast<double>(points.size())); }

namespace {

// Cubes of side `s` on the symmetric lattice covering [-r, r]^k that meet
// B^k(r), centres projected into the ball.
std::vector<Vector> grid_cells(std::size_t k, double r, double s, std::size_t cap) {
  const auto per_axis = static_cast<std::size_t>(std::ceil(2.0 * r / s - 1e-12));
  std::vector<double> centres(per_axis);
  std::vector<double> near(per_axis);  // |closest coordinate| of each cell
  for (std::size_t j = 0; j < per_axis; ++j) {
    centres[j] = (static_cast<double>(j) - 0.5 * static_cast<double>(per_axis - 1)) * s;
    near[j] = std::max(0.0, std::abs(centres[j]) - 0.5 * s);
  }
  const double r2 = r * r * (1.0 + 1e-12);

  std::vector<Vector> out;
  std::vector<std::size_t> idx(k, 0);
  std::vector<double> partial(k + 1, 0.0);
  // Depth-first odometer with pruning on the partial squared distance.
  std::size_t depth = 0;
  while (true) {
    if (depth == k) {
      Vector c(k);
      for (std::size_t i = 0; i < k; ++i) c[i] = centres[idx[i]];
      const double nc = norm2(c);
      if (nc > r) {
        for (double& x : c) x *= r / nc;
      }
      out.push_back(std::move(c));
      if (out.size() > cap) {
        throw CapacityError("net too large: more than " + std::to_string(cap) + " points needed", out.size());
      }
      --depth;
      ++idx[depth];
      continue;
    }
    if (idx[depth] >= per_axis) {
      if (depth == 0) break;
      idx[depth] = 0;
      --depth;
      ++idx[depth];
      continue;
    }
    const double d2 = partial[depth] + near[idx[depth]] * near[idx[depth]];
    if (d2 > r2) {
      // `near` is symmetric and decreasing towards the middle, so later
      // indices past the middle may still fit; only skip this one.
      ++idx[depth];
      continue;
    }
    partial[depth + 1] = d2;
    ++depth;
    if (depth < k) idx[depth] = 0;
  }
  return out;
}

}  // namespace

EpsilonNet build_ball_net(std::size_t k, double r, double eta, std::size_t cap) {
  if (k == 0) throw DimensionError("build_ball_net: k must be at least 1");
  if (!(r > 0.0) || !(eta > 0.0)) throw std::invalid_argument("build_ball_net: r and eta must be positive");
  EpsilonNet net;
  net.dim = k;
  net.radius = r;
  net.resolution = eta;
  if (eta >= r) {
    net.points.push_back(Vector(k, 0.0));
    return net;
  }
  const double spacing = 2.0 * eta / std::sqrt(static_cast<double>(k));
  // Estimate before enumerating: log of the unpruned grid size.
  const double per_axis = std::ceil(2.0 * r / spacing - 1e-12);
  const double log_grid = static_cast<double>(k) * std::log(per_axis);
  if (log_grid > std::log(static_cast<double>(cap)) + static_cast<double>(k) * std::log(2.0) + 8.0) {
    throw CapacityError("net too large: grid needs about e^" + std::to_string(log_grid) + " cells",
                        static_cast<std::size_t>(std::min(std::exp(log_grid), 1e18)));
  }
  net.points = grid_cells(k, r, spacing, cap);
  if (net.log_cardinality() <= net.cardinality_bound() + 1e-12) return net;

  // Refine: halve the spacing and greedily keep candidates more than η/2
  // from every kept point. Each candidate is within η/2 of a kept point and
  // each ball point within η/2 of a candidate.
  const std::vector<Vector> fine = grid_cells(k, r, 0.5 * spacing, 64 * cap);
  std::vector<Vector> kept;
  for (const auto& c : fine) {
    if (kept.empty() || distance_to_net(kept, c) > 0.5 * eta) {
      kept.push_back(c);
      if (kept.size() > cap) throw CapacityError("net too large after refinement", kept.size());
    }
  }
  if (kept.size() < net.points.size()) net.points = std::move(kept);
  return net;
}

double distance_to_net(std::span<const Vector> points, std::span<const double> p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : points) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size() && s < best * best; ++i) {
      const double d = p[i] - q[i];
      s += d * d;
    }
    best = std::min(best, std::sqrt(s));
  }
  return best;
}

Vector sample_ball(std::size_t k, double r, RngStream& rng) {
  Vector p(k);
  for (double& x : p) x = rng.normal();
  const double np = norm2(p);
  const double radius = r * std::pow(rng.uniform(), 1.0 / static_cast<double>(k));
  for (double& x : p) x *= radius / np;
  return p;
}

// ---------------------------------------------------------------------------
// FinitePointSet

FinitePointSet::FinitePointSet(std::vector<Vector> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("point set must be non-empty");
  const std::size_t d = points_.front().size();
  min_norm_ = std::numeric_limits<double>::infinity();
  for (const auto& p : points_) {
    if (p.size() != d) throw DimensionError("point set mixes dimensions");
    const double np = norm2(p);
    rad_ = std::max(rad_, np);
    min_norm_ = std::min(min_norm_, np);
  }
}

double FinitePointSet::diam() const {
  if (!diam_) {
    double d = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (std::size_t j = i + 1; j < points_.size(); ++j) d = std::max(d, distance(points_[i], points_[j]));
    diam_ = d;
  }
  return *diam_;
}

FinitePointSet FinitePointSet::subsample(std::size_t count, RngSeed seed) const {
  if (count >= points_.size()) return *this;
  std::vector<std::size_t> order(points_.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    const auto span = static_cast<double>(order.size() - i);
    const std::size_t j = i + std::min(order.size() - i - 1, static_cast<std::size_t>(rng.uniform() * span));
    std::swap(order[i], order[j]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  std::vector<Vector> pts;
  pts.reserve(count);
  for (std::size_t i : order) pts.push_back(points_[i]);
  return FinitePointSet(std::move(pts));
}

FinitePointSet FinitePointSet::scaled(double c) const {
  std::vector<Vector> pts = points_;
  for (auto& p : pts)
    for (double& x : p) x *= c;
  return FinitePointSet(std::move(pts));
}

namespace {

std::vector<Vector> distinct(std::vector<Vector> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

ImageNet image_net(const EpsilonNet& net_u, const EpsilonNet& net_v, const GeneratorNet& g, const GeneratorNet& h,
                   std::size_t cap) {
  if (net_u.dim != g.latent_dim() || net_v.dim != h.latent_dim()) {
    throw DimensionError("image_net: net dimensions do not match generator latent dims");
  }
  std::vector<Vector> gx, hy;
  gx.reserve(net_u.points.size());
  hy.reserve(net_v.points.size());
  for (const auto& u : net_u.points) gx.push_back(g.forward(u));
  for (const auto& v : net_v.points) hy.push_back(h.forward(v));
  gx = distinct(std::move(gx));
  hy = distinct(std::move(hy));
  const double product = static_cast<double>(gx.size()) * static_cast<double>(hy.size());
  if (product > static_cast<double>(cap)) {
    throw CapacityError("image net too large: " + std::to_string(gx.size()) + " x " + std::to_string(hy.size()) +
                            " points",
                        gx.size() * hy.size());
  }
  std::vector<Vector> pts;
  pts.reserve(gx.size() * hy.size());
  for (const auto& x : gx)
    for (const auto& y : hy) pts.push_back(concat(x, y));
  const double dg = g.lipschitz_bound() * net_u.resolution;
  const double dh = h.lipschitz_bound() * net_v.resolution;
  return {FinitePointSet(std::move(pts)), std::hypot(dg, dh)};
}

// ---------------------------------------------------------------------------
// Width

WidthEstimates gaussian_width_and_complexity_mc(const FinitePointSet& set, std::size_t samples, RngSeed seed) {
  if (samples < 2) throw std::invalid_argument("gaussian width: need at least 2 samples");
  const std::size_t d = set.dim();
  RngStream rng(seed);
  Vector g(d);
  double sw = 0.0, sw2 = 0.0, sc = 0.0, sc2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (double& x : g) x = rng.normal();
    double best = -std::numeric_limits<double>::infinity();
    double best_abs = 0.0;
    for (const auto& p : set.points()) {
      const double ip = dot(p, g);
      best = std::max(best, ip);
      best_abs = std::max(best_abs, std::abs(ip));
    }
    sw += best;
    sw2 += best * best;
    sc += best_abs;
    sc2 += best_abs * best_abs;
  }
  const auto ns = static_cast<double>(samples);
  auto finish = [ns](double s, double s2) {
    const double mean = s / ns;
    const double var = std::max(0.0, (s2 - ns * mean * mean) / (ns - 1.0));
    return McEstimate{mean, std::sqrt(var / ns)};
  };
  return {finish(sw, sw2), finish(sc, sc2)};
}

McEstimate gaussian_width_mc(const FinitePointSet& set, std::size_t samples, RngSeed seed) {
  return gaussian_width_and_complexity_mc(set, samples, seed).width;
}

McEstimate gaussian_complexity_mc(const FinitePointSet& set, std::size_t samples, RngSeed seed) {
  return gaussian_width_and_complexity_mc(set, samples, seed).complexity;
}

// ---------------------------------------------------------------------------
// Deviation

double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(level, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DeviationReport deviation_experiment(const EnsembleSpec& spec, const FinitePointSet& set, std::size_t m,
                                     std::size_t n, std::size_t trials, double t, RngSeed seed,
                                     std::size_t gamma_samples) {
  if (set.dim() != n + m) {
    throw DimensionError("deviation_experiment: points have dimension " + std::to_string(set.dim()) +
                         ", expected n + m = " + std::to_string(n + m));
  }
  if (trials < 30) throw std::invalid_argument("deviation_experiment: need at least 30 trials");
  DeviationReport r;
  r.t = t;
  r.rad = set.rad();
  r.k_tilde = spec.k_tilde();
  const RngSeed matrix_family = derive_seed(seed, 1);
  r.sup_deviation_samples.reserve(trials);
  for (std::size_t j = 0; j < trials; ++j) {
    const MixingOperator op(sample_matrix(spec, m, n, {matrix_family.seed, matrix_family.stream + j}));
    double sup = 0.0;
    for (const auto& z : set.points()) {
      const std::span<const double> zs(z);
      sup = std::max(sup, std::abs(deviation_stat(op, zs.first(n), zs.subspan(n))));
    }
    r.sup_deviation_samples.push_back(sup);
  }
  const WidthEstimates w = gaussian_width_and_complexity_mc(set, gamma_samples, derive_seed(seed, 2));
  r.gamma_estimate = w.complexity;
  r.width_estimate = w.width;
  r.quantile_level = 1.0 - std::exp(-t * t);
  r.quantile = empirical_quantile(r.sup_deviation_samples, r.quantile_level);
  const double scale = r.gamma_estimate.value + t * r.rad;
  r.bound_value = r.k_tilde * scale;
  r.empirical_constant = scale > 0.0 ? r.quantile / scale / r.k_tilde : 0.0;
  const double mean_sup =
      std::accumulate(r.sup_deviation_samples.begin(), r.sup_deviation_samples.end(), 0.0) /
      static_cast<double>(trials);
  r.expectation_constant = r.gamma_estimate.value > 0.0 ? mean_sup / (r.k_tilde * r.gamma_estimate.value) : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// S-REC

namespace {

struct SrecWork {
  std::vector<Vector> bz;  // m^{-1/2} B z_i
  const FinitePointSet* set = nullptr;
  double gamma = 0.0;
  double delta = 0.0;

  double margin(std::size_t i, std::size_t j) const {
    return distance(bz[i], bz[j]) - gamma * distance(set->points()[i], set->points()[j]) + delta;
  }
};

SrecWork prepare_srec(const MixingOperator& op, const FinitePointSet& set, double gamma, double delta) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("srec_check: gamma must lie in (0, 1]");
  if (!(delta >= 0.0)) throw std::invalid_argument("srec_check: delta must be non-negative");
  if (set.dim() != op.n() + op.m()) {
    throw DimensionError("srec_check: points have dimension " + std::to_string(set.dim()) + ", expected n + m = " +
                         std::to_string(op.n() + op.m()));
  }
  SrecWork w;
  w.set = &set;
  w.gamma = gamma;
  w.delta = delta;
  w.bz.reserve(set.size());
  for (const auto& z : set.points()) {
    Vector b = op.apply(z);
    for (double& x : b) x /= op.scale();
    w.bz.push_back(std::move(b));
  }
  return w;
}

}  // namespace

SrecReport srec_check(const MixingOperator& op, const FinitePointSet& set, double gamma, double delta,
                      std::size_t pair_cap) {
  const std::size_t t = set.size();
  const std::size_t pairs = t * (t - 1) / 2;
  if (pairs > pair_cap) {
    throw CapacityError("srec_check: " + std::to_string(pairs) + " pairs exceed the cap of " +
                            std::to_string(pair_cap) + "; use srec_check_subsampled with a recorded seed",
                        pairs);
  }
  const SrecWork w = prepare_srec(op, set, gamma, delta);
  SrecReport r;
  r.gamma = gamma;
  r.delta = delta;
  r.min_margin = delta;  // vacuous when there are no pairs
  r.pair_count = pairs;
  bool first = true;
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = i + 1; j < t; ++j) {
      const double mg = w.margin(i, j);
      if (first || mg < r.min_margin) {
        r.min_margin = mg;
        r.argmin_pair = {i, j};
        first = false;
      }
    }
  return r;
}

SrecReport srec_check_subsampled(const MixingOperator& op, const FinitePointSet& set, double gamma, double delta,
                                 std::size_t pairs, RngSeed seed) {
  const SrecWork w = prepare_srec(op, set, gamma, delta);
  SrecReport r;
  r.gamma = gamma;
  r.delta = delta;
  r.min_margin = delta;
  r.subsample_seed = seed;
  const std::size_t t = set.size();
  if (t < 2) return r;
  RngStream rng(seed);
  const auto dt = static_cast<double>(t);
  bool first = true;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t i = std::min(t - 1, static_cast<std::size_t>(rng.uniform() * dt));
    std::size_t j = std::min(t - 2, static_cast<std::size_t>(rng.uniform() * (dt - 1.0)));
    if (j >= i) ++j;
    const double mg = w.margin(i, j);
    if (first || mg < r.min_margin) {
      r.min_margin = mg;
      r.argmin_pair = {std::min(i, j), std::max(i, j)};
      first = false;
    }
    ++r.pair_count;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Phase experiment

double sign_test_p_value(std::size_t k, std::size_t n) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  // Sum of C(n, i)/2^n for i >= k, in log space.
  double p = 0.0;
  for (std::size_t i = k; i <= n; ++i) {
    const double log_term = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(i) + 1.0) -
                            std::lgamma(static_cast<double>(n - i) + 1.0) - static_cast<double>(n) * std::log(2.0);
    p += std::exp(log_term);
  }
  return std::min(1.0, p);
}

GeneratorNet random_two_layer_relu(std::size_t k, std::size_t hidden, std::size_t out, RngSeed seed,
                                   Activation output_activation) {
  const std::size_t dims[] = {k, hidden, out};
  const Activation acts[] = {{ActivationKind::relu}, output_activation};
  return random_dense_net(dims, acts, seed, std::sqrt(2.0), 0.1);
}

namespace {

double median(std::vector<double> v) { return empirical_quantile(std::move(v), 0.5); }

}  // namespace

PhaseTable phase_experiment(const PhaseConfig& cfg) {
  if (cfg.m_list.empty()) throw std::invalid_argument("phase_experiment: m_list is empty");
  for (std::size_t m : cfg.m_list)
    if (m == 0) throw std::invalid_argument("phase_experiment: every m must be at least 1");
  if (cfg.instances == 0) throw std::invalid_argument("phase_experiment: instances must be positive");
  if (cfg.n_rule != "fixed" && cfg.n_rule != "equal-m") {
    throw std::invalid_argument("phase_experiment: n_rule must be 'fixed' or 'equal-m'");
  }
  PhaseTable table;
  for (double noise : cfg.noise_levels) {
    std::vector<std::size_t> first_row_of_level;
    for (std::size_t m : cfg.m_list) {
      const std::size_t n = cfg.n_rule == "fixed" ? cfg.n : m;
      PhaseRow row;
      row.m = m;
      row.noise = noise;
      for (std::size_t inst = 0; inst < cfg.instances; ++inst) {
        const GeneratorNet g =
            random_two_layer_relu(cfg.k, cfg.hidden, n, {cfg.generator_seed, 2 * inst}, cfg.output_activation);
        const GeneratorNet h =
            random_two_layer_relu(cfg.k_prime, cfg.hidden, m, {cfg.generator_seed, 2 * inst + 1},
                                  cfg.output_activation);
        RngStream truth_rng({cfg.truth_seed, inst});
        Vector u(cfg.k), v(cfg.k_prime);
        for (double& x : u) x = truth_rng.normal();
        for (double& x : v) x = truth_rng.normal();
        std::optional<Vector> eta;
        if (noise > 0.0) {
          RngStream noise_rng({cfg.noise_seed, inst});
          Vector e(m);
          for (double& x : e) x = noise_rng.normal();
          const double ne = norm2(e);
          for (double& x : e) x *= noise / ne;
          eta = std::move(e);
        }
        MixingOperator op(sample_matrix(cfg.ensemble, m, n, {cfg.matrix_seed, inst}));
        const DemixProblem problem = DemixProblem::planted(std::move(op), g, h, u, v, eta);
        SolverConfig sc = cfg.solver;
        sc.seed = {cfg.solver.seed.seed, cfg.solver.seed.stream + inst * 1000};
        const RecoveryResult res = solve(problem, sc, InitScheme::random());
        const Vector zs = concat(problem.truth()->x, problem.truth()->y);
        const Vector zh = concat(res.x_hat, res.y_hat);
        row.absolute_errors.push_back(distance(zh, zs));
        row.relative_errors.push_back(*res.relative_error);
      }
      row.median_relative_error = median(row.relative_errors);
      row.median_absolute_error = median(row.absolute_errors);
      const auto successes = std::count_if(row.relative_errors.begin(), row.relative_errors.end(),
                                           [&](double e) { return e <= cfg.success_threshold; });
      row.success_rate = static_cast<double>(successes) / static_cast<double>(cfg.instances);
      table.rows.push_back(std::move(row));
    }
    // Pooled paired sign test over consecutive m values at this noise level.
    MonotoneCheck check;
    check.noise = noise;
    const std::size_t base = table.rows.size() - cfg.m_list.size();
    for (std::size_t i = 0; i + 1 < cfg.m_list.size(); ++i) {
      const auto& a = table.rows[base + i].relative_errors;
      const auto& b = table.rows[base + i + 1].relative_errors;
      for (std::size_t s = 0; s < a.size(); ++s) {
        if ((a[s] <= cfg.tie_floor && b[s] <= cfg.tie_floor) || a[s] == b[s]) {
          ++check.ties;
        } else if (b[s] < a[s]) {
          ++check.decreases;
        } else {
          ++check.increases;
        }
      }
    }
    check.p_value = sign_test_p_value(check.decreases, check.decreases + check.increases);
    table.monotone.push_back(check);
  }
  return table;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json deviation_report_to_json(const DeviationReport& r) {
  return {{"sup_deviation_samples", r.sup_deviation_samples},
          {"gamma_estimate", {{"value", r.gamma_estimate.value}, {"stderr", r.gamma_estimate.std_error}}},
          {"width_estimate", {{"value", r.width_estimate.value}, {"stderr", r.width_estimate.std_error}}},
          {"rad", r.rad},
          {"t", r.t},
          {"k_tilde", r.k_tilde},
          {"quantile_level", r.quantile_level},
          {"quantile", r.quantile},
          {"bound_value", r.bound_value},
          {"empirical_constant", r.empirical_constant},
          {"expectation_constant", r.expectation_constant}};
}

nlohmann::json srec_report_to_json(const SrecReport& r) {
  nlohmann::json doc = {{"gamma", r.gamma},
                        {"delta", r.delta},
                        {"min_margin", r.min_margin},
                        {"argmin_pair", {r.argmin_pair.first, r.argmin_pair.second}},
                        {"pair_count", r.pair_count},
                        {"holds", r.holds()}};
  if (r.subsample_seed) {
    doc["subsample_seed"] = {{"seed", r.subsample_seed->seed}, {"stream", r.subsample_seed->stream}};
  }
  return doc;
}

nlohmann::json phase_table_to_json(const PhaseTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"m", r.m},
                    {"noise", r.noise},
                    {"median_relative_error", r.median_relative_error},
                    {"median_absolute_error", r.median_absolute_error},
                    {"success_rate", r.success_rate},
                    {"relative_errors", r.relative_errors},
                    {"absolute_errors", r.absolute_errors}});
  }
  nlohmann::json mono = nlohmann::json::array();
  for (const auto& c : t.monotone) {
    mono.push_back({{"noise", c.noise},
                    {"decreases", c.decreases},
                    {"increases", c.increases},
                    {"ties", c.ties},
                    {"p_value", c.p_value}});
  }
  return {{"rows", std::move(rows)}, {"monotone", std::move(mono)}};
}

PhaseConfig phase_config_from_json(const nlohmann::json& doc) {
  PhaseConfig c;
  try {
    if (!doc.contains("m_list")) throw ParseError("$.m_list", "missing");
    c.m_list = doc.at("m_list").get<std::vector<std::size_t>>();
    c.k = doc.value("k", c.k);
    c.k_prime = doc.value("k_prime", c.k_prime);
    c.n = doc.value("n", c.n);
    c.n_rule = doc.value("n_rule", c.n_rule);
    c.hidden = doc.value("hidden", c.hidden);
    if (doc.contains("output_activation")) {
      c.output_activation = Activation::parse(doc["output_activation"].get<std::string>());
    }
    if (doc.contains("ensemble")) c.ensemble = EnsembleSpec::parse(doc["ensemble"].get<std::string>());
    c.generator_seed = doc.value("generator_seed", c.generator_seed);
    c.truth_seed = doc.value("truth_seed", c.truth_seed);
    c.matrix_seed = doc.value("matrix_seed", c.matrix_seed);
    c.noise_seed = doc.value("noise_seed", c.noise_seed);
    if (doc.contains("noise_levels")) c.noise_levels = doc["noise_levels"].get<std::vector<double>>();
    c.instances = doc.value("instances", c.instances);
    c.success_threshold = doc.value("success_threshold", c.success_threshold);
    c.tie_floor = doc.value("tie_floor", c.tie_floor);
    c.solver.restarts = 4;
    if (doc.contains("solver")) c.solver = config_from_json(doc["solver"]);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("$", e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError("$", e.what());
  }
  return c;
}

nlohmann::json phase_config_to_json(const PhaseConfig& c) {
  return {{"m_list", c.m_list},
          {"k", c.k},
          {"k_prime", c.k_prime},
          {"n", c.n},
          {"n_rule", c.n_rule},
          {"hidden", c.hidden},
          {"output_activation", c.output_activation.name()},
          {"ensemble", c.ensemble.name()},
          {"generator_seed", c.generator_seed},
          {"truth_seed", c.truth_seed},
          {"matrix_seed", c.matrix_seed},
          {"noise_seed", c.noise_seed},
          {"noise_levels", c.noise_levels},
          {"instances", c.instances},
          {"success_threshold", c.success_threshold},
          {"tie_floor", c.tie_floor},
          {"solver", config_to_json(c.solver)}};
}

}  // namespace demix
