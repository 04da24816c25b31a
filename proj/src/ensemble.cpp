#include "demix/ensemble.hpp"

#include <cmath>

#include "demix/errors.hpp"

namespace demix {
namespace {

double draw(EnsembleKind kind, const CounterRng& rng, std::uint64_t index) {
  switch (kind) {
    case EnsembleKind::gaussian:
      return rng.normal(index);
    case EnsembleKind::rademacher:
      return rng.uniform(index) < 0.5 ? -1.0 : 1.0;
    case EnsembleKind::uniform_scaled:
      return std::sqrt(3.0) * (2.0 * rng.uniform(index) - 1.0);
  }
  return 0.0;
}

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw DimensionError(std::string(what) + " must be at least 1");
}

}  // namespace

EnsembleSpec EnsembleSpec::of(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::gaussian:
      return {kind, std::sqrt(8.0 / 3.0)};
    case EnsembleKind::rademacher:
    case EnsembleKind::uniform_scaled:
      return {kind, std::sqrt(2.0)};
  }
  throw std::invalid_argument("unknown ensemble kind");
}

EnsembleSpec EnsembleSpec::parse(std::string_view name) {
  if (name == "gaussian") return of(EnsembleKind::gaussian);
  if (name == "rademacher") return of(EnsembleKind::rademacher);
  if (name == "uniform-scaled" || name == "uniform") return of(EnsembleKind::uniform_scaled);
  throw std::invalid_argument("unknown ensemble '" + std::string(name) +
                              "' (expected gaussian, rademacher or uniform-scaled)");
}

std::string EnsembleSpec::name() const {
  switch (kind) {
    case EnsembleKind::gaussian:
      return "gaussian";
    case EnsembleKind::rademacher:
      return "rademacher";
    case EnsembleKind::uniform_scaled:
      return "uniform-scaled";
  }
  return "?";
}

double EnsembleSpec::k_tilde() const { return k_analytic * std::sqrt(std::log(k_analytic)); }

double subgaussian_tail_bound(double k, double t) { return 2.0 * std::exp(-(t * t) / (k * k)); }

DenseMatrix sample_matrix(const EnsembleSpec& spec, std::size_t m, std::size_t n, RngSeed seed) {
  require_positive(m, "row count m");
  require_positive(n, "column count n");
  const CounterRng rng(seed);
  std::vector<double> data(m * n);
  for (std::size_t idx = 0; idx < data.size(); ++idx) data[idx] = draw(spec.kind, rng, idx);
  return DenseMatrix(m, n, std::move(data));
}

DenseMatrix empirical_row_covariance(const EnsembleSpec& spec, std::size_t n, std::size_t trials,
                                     RngSeed seed) {
  require_positive(n, "dimension n");
  require_positive(trials, "trials");
  const CounterRng rng(seed);
  DenseMatrix cov(n, n);
  Vector row(n);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t j = 0; j < n; ++j) row[j] = draw(spec.kind, rng, t * n + j);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) cov(i, j) += row[i] * row[j];
  }
  const double inv = 1.0 / static_cast<double>(trials);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cov(i, j) *= inv;
  return cov;
}

double tail_check(const EnsembleSpec& spec, std::span<const double> direction, std::size_t trials,
                  double t, RngSeed seed) {
  require_positive(direction.size(), "dimension n");
  require_positive(trials, "trials");
  if (std::abs(norm2(direction) - 1.0) > 1e-12) {
    throw std::invalid_argument("tail_check: direction must be a unit vector");
  }
  if (!(t >= 0.0)) throw std::invalid_argument("tail_check: t must be non-negative");
  const std::size_t n = direction.size();
  const CounterRng rng(seed);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < trials; ++r) {
    double proj = 0.0;
    for (std::size_t j = 0; j < n; ++j) proj += draw(spec.kind, rng, r * n + j) * direction[j];
    if (std::abs(proj) >= t) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace demix
