#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "demix/linalg.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(DEMIX_FIXTURE_DIR) / name;
}

/// Independent of the library's generator on purpose.
struct Draw {
  std::mt19937_64 eng;
  explicit Draw(std::uint64_t seed) : eng(seed) {}
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  demix::Vector vec(std::size_t n) {
    demix::Vector v(n);
    for (double& x : v) x = normal();
    return v;
  }
  demix::Vector unit(std::size_t n) {
    demix::Vector v = vec(n);
    double s = 0.0;
    for (double x : v) s += x * x;
    for (double& x : v) x /= std::sqrt(s);
    return v;
  }
  demix::DenseMatrix mat(std::size_t r, std::size_t c, double scale = 1.0) {
    std::vector<double> d(r * c);
    for (double& x : d) x = scale * normal();
    return demix::DenseMatrix(r, c, std::move(d));
  }
};

inline Eigen::MatrixXd to_eigen(const demix::DenseMatrix& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  return m;
}

inline Eigen::VectorXd to_eigen(const demix::Vector& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Triple-loop product, no shared code with the library.
inline demix::Vector naive_matvec(const demix::DenseMatrix& a, const demix::Vector& x) {
  demix::Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[i] += a(i, j) * x[j];
  return out;
}

inline double max_abs_diff(const demix::Vector& a, const demix::Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double l2(const demix::Vector& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

inline double rel_diff(const demix::Vector& a, const demix::Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s) / std::max(l2(b), 1e-300);
}

}  // namespace testing
