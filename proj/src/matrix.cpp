#include "ddikg/matrix.hpp"

#include <cmath>

namespace ddikg::linalg {

void matvec(const Matrix& m, std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

void matvec_t_acc(const Matrix& m, std::span<const double> g, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    const double gr = g[r];
    if (gr == 0.0) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c] * gr;
  }
}

void outer_acc(std::span<const double> a, std::span<const double> b, double scale, Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double ar = a[r] * scale;
    if (ar == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += ar * b[c];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void normalize_l2(std::span<double> a) {
  const double n = l2_norm(a);
  if (n == 0.0) return;
  for (double& v : a) v /= n;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace ddikg::linalg
