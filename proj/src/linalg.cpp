#include "demix/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "demix/errors.hpp"
#include "demix/rng.hpp"

namespace demix {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw StructuralError("matrix entries must be finite");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n, double scale) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

double DenseMatrix::frobenius_norm() const noexcept { return norm2(data_); }

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

double distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) {
    throw DimensionError("matvec: matrix has " + std::to_string(a.cols()) + " columns, vector has " +
                         std::to_string(x.size()) + " entries");
  }
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) {
    throw DimensionError("matvec_transposed: matrix has " + std::to_string(a.rows()) +
                         " rows, vector has " + std::to_string(x.size()) + " entries");
  }
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < r.size(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("hconcat: row counts differ");
  DenseMatrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
  }
  return out;
}

DenseMatrix block_diag(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() + b.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) out(a.rows() + i, a.cols() + j) = b(i, j);
  return out;
}

Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double spectral_norm(const DenseMatrix& a, double rel_tol, int max_iter) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  // Fixed pseudo-random start: a constant start vector can be orthogonal to
  // the top right-singular vector.
  RngStream rng({0x5eed5eedull, 0});
  Vector v(a.cols());
  for (double& x : v) x = rng.normal();
  double nv = norm2(v);
  for (double& x : v) x /= nv;

  double sigma = norm2(matvec(a, v));
  for (int it = 0; it < max_iter; ++it) {
    Vector w = matvec_transposed(a, matvec(a, v));
    const double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) v[j] = w[j] / nw;
    const double next = norm2(matvec(a, v));
    const bool converged = std::abs(next - sigma) <= rel_tol * next;
    sigma = next;
    if (converged) break;
  }
  return sigma;
}

}  // namespace demix
