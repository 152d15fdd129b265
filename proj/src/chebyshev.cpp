#include "jacfast/chebyshev.hpp"

#include <cmath>
#include <numbers>

#include "jacfast/error.hpp"

namespace jacfast::cheb {

using std::numbers::pi;

std::vector<double> points(int k) {
  if (k < 2) throw DomainError("Chebyshev grid needs at least 2 points");
  const int n = k - 1;
  std::vector<double> x(k);
  // sine form keeps the grid exactly antisymmetric
  for (int j = 0; j < k; ++j) x[j] = std::sin(pi * (2 * j - n) / (2.0 * n));
  return x;
}

std::vector<double> points(int k, double lo, double hi) {
  auto x = points(k);
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  for (auto& v : x) v = c + h * v;
  x.front() = lo;
  x.back() = hi;
  return x;
}

std::vector<double> bary_weights(int k) {
  std::vector<double> w(k);
  for (int j = 0; j < k; ++j) w[j] = (j % 2 == 0) ? 1.0 : -1.0;
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

void lagrange_basis(std::span<const double> nodes, std::span<const double> weights, double x,
                    std::span<double> out) {
  const std::size_t k = nodes.size();
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double d = x - nodes[j];
    if (d == 0.0) {
      for (std::size_t i = 0; i < k; ++i) out[i] = 0.0;
      out[j] = 1.0;
      return;
    }
    out[j] = weights[j] / d;
    sum += out[j];
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < k; ++j) out[j] *= inv;
}

double interpolate(std::span<const double> nodes, std::span<const double> weights,
                   std::span<const double> values, double x) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double d = x - nodes[j];
    if (d == 0.0) return values[j];
    const double l = weights[j] / d;
    num += l * values[j];
    den += l;
  }
  return num / den;
}

Eigen::MatrixXd coefficient_matrix(int k) {
  const int n = k - 1;
  Eigen::MatrixXd c(k, k);
  for (int m = 0; m < k; ++m) {
    for (int j = 0; j < k; ++j) {
      // x_j = cos(pi (n-j)/n); reduce the angle exactly in integers
      const long idx = (static_cast<long>(m) * (n - j)) % (2L * n);
      double v = std::cos(pi * static_cast<double>(idx) / n);
      if (j == 0 || j == n) v *= 0.5;
      c(m, j) = 2.0 / n * v;
    }
  }
  c.row(0) *= 0.5;
  c.row(n) *= 0.5;
  return c;
}

namespace {

double clenshaw(const Eigen::VectorXd& c, double x) {
  double b1 = 0.0, b2 = 0.0;
  for (Eigen::Index m = c.size() - 1; m >= 1; --m) {
    const double b0 = 2.0 * x * b1 - b2 + c(m);
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + c(0);
}

}  // namespace

Eigen::MatrixXd integration_matrix(int k, double anchor) {
  const Eigen::MatrixXd cm = coefficient_matrix(k);
  const auto x = points(k);
  Eigen::MatrixXd s(k, k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(k + 2);
    c.head(k) = cm.col(j);
    Eigen::VectorXd ic = Eigen::VectorXd::Zero(k + 1);
    for (int m = 1; m <= k; ++m) {
      const double lower = (m == 1) ? 2.0 * c(0) : c(m - 1);
      ic(m) = (lower - c(m + 1)) / (2.0 * m);
    }
    const double base = clenshaw(ic, anchor);
    for (int i = 0; i < k; ++i) s(i, j) = clenshaw(ic, x[i]) - base;
  }
  return s;
}

Eigen::MatrixXd differentiation_matrix(int k) {
  const auto x = points(k);
  const auto w = bary_weights(k);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    double diag = 0.0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      d(i, j) = (w[j] / w[i]) / (x[i] - x[j]);
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

}  // namespace jacfast::cheb
