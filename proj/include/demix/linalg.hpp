#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace demix {

using Vector = std::vector<double>;

/// Row-major dense matrix. Entries are always finite; constructors that take
/// data check it.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);  // zero-filled
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n, double scale = 1.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  double frobenius_norm() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double squared_norm(std::span<const double> a);
double distance(std::span<const double> a, std::span<const double> b);

/// y = A x
Vector matvec(const DenseMatrix& a, std::span<const double> x);
/// y = Aᵀ x
Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x);

/// Horizontal concatenation [A B].
DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b);
/// Block-diagonal [A 0; 0 B].
DenseMatrix block_diag(const DenseMatrix& a, const DenseMatrix& b);

Vector concat(std::span<const double> a, std::span<const double> b);

/// Largest singular value by power iteration on AᵀA, stopping when successive
/// estimates agree to `rel_tol` (at most `max_iter` sweeps). The estimate
/// approaches σmax from below.
double spectral_norm(const DenseMatrix& a, double rel_tol = 1e-8, int max_iter = 10000);

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what);

}  // namespace demix
