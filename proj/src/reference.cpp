#include "jacfast/reference.hpp"

#include <cmath>

#include <omp.h>

#include "jacfast/error.hpp"

namespace jacfast::reference {

namespace {

void check(std::span<const double> points, std::span<const double> weights, std::size_t len) {
  if (!weights.empty() && weights.size() != points.size()) throw ShapeError("weights must match points");
  if (len != points.size()) throw ShapeError("vector length must match the number of points");
}

double scale(std::span<const double> weights, std::size_t j) { return weights.empty() ? 1.0 : std::sqrt(weights[j]); }

}  // namespace

Eigen::MatrixXd transform_matrix(const JacobiParams& p, std::span<const double> points,
                                 std::span<const double> weights) {
  check(points, weights, points.size());
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd m(n, n);
  const ModifiedJacobiEvaluator ev(p, static_cast<int>(std::max<Eigen::Index>(n - 1, 0)));
#pragma omp parallel
  {
    std::vector<double> row(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
    for (Eigen::Index j = 0; j < n; ++j) {
      ev.eval_all(points[j], row);
      const double s = scale(weights, j);
      for (Eigen::Index k = 0; k < n; ++k) m(j, k) = s * row[k];
    }
  }
  return m;
}

std::vector<double> forward(const JacobiParams& p, std::span<const double> points, std::span<const double> weights,
                            std::span<const double> alpha) {
  check(points, weights, alpha.size());
  const std::size_t n = points.size();
  std::vector<double> out(n, 0.0);
  const ModifiedJacobiEvaluator ev(p, static_cast<int>(std::max<std::size_t>(n, 1) - 1));
#pragma omp parallel
  {
    std::vector<double> row(n);
#pragma omp for schedule(static)
    for (std::size_t j = 0; j < n; ++j) {
      ev.eval_all(points[j], row);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += row[k] * alpha[k];
      out[j] = scale(weights, j) * s;
    }
  }
  return out;
}

std::vector<double> forward_rows(const JacobiParams& p, std::span<const double> points,
                                 std::span<const double> weights, std::span<const double> alpha,
                                 std::span<const std::size_t> rows) {
  check(points, weights, alpha.size());
  const std::size_t n = points.size();
  for (auto r : rows)
    if (r >= n) throw ShapeError("forward_rows: row index out of range");
  std::vector<double> out(rows.size(), 0.0);
  const ModifiedJacobiEvaluator ev(p, static_cast<int>(std::max<std::size_t>(n, 1) - 1));
#pragma omp parallel
  {
    std::vector<double> row(n);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ev.eval_all(points[rows[i]], row);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += row[k] * alpha[k];
      out[i] = scale(weights, rows[i]) * s;
    }
  }
  return out;
}

std::vector<double> inverse(const JacobiParams& p, std::span<const double> points, std::span<const double> weights,
                            std::span<const double> g) {
  check(points, weights, g.size());
  const std::size_t n = points.size();
  const ModifiedJacobiEvaluator ev(p, static_cast<int>(std::max<std::size_t>(n, 1) - 1));
  std::vector<std::vector<double>> part(static_cast<std::size_t>(omp_get_max_threads()), std::vector<double>(n, 0.0));
#pragma omp parallel
  {
    std::vector<double> row(n);
    auto& acc = part[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::size_t j = 0; j < n; ++j) {
      ev.eval_all(points[j], row);
      const double h = scale(weights, j) * g[j];
      for (std::size_t k = 0; k < n; ++k) acc[k] += row[k] * h;
    }
  }
  std::vector<double> out(n, 0.0);
  for (const auto& a : part)
    for (std::size_t k = 0; k < n; ++k) out[k] += a[k];
  return out;
}

std::vector<double> forward_serial(const TransformPlan& plan, std::span<const double> alpha) {
  std::vector<double> out(static_cast<std::size_t>(plan.n()));
  apply_forward(plan, alpha, out, false);
  return out;
}

std::vector<double> inverse_serial(const TransformPlan& plan, std::span<const double> g) {
  std::vector<double> out(static_cast<std::size_t>(plan.n()));
  apply_inverse(plan, g, out, false);
  return out;
}

std::vector<double> apply_along_axes(const Eigen::MatrixXd& m, int dims, std::span<const double> x) {
  const auto n = static_cast<std::size_t>(m.rows());
  if (m.cols() != m.rows() || dims < 1) throw ShapeError("apply_along_axes: need a square matrix and dims >= 1");
  std::size_t total = 1;
  for (int d = 0; d < dims; ++d) total *= n;
  if (x.size() != total) throw ShapeError("apply_along_axes: tensor length mismatch");
  std::vector<double> cur(x.begin(), x.end()), next(total);
  for (int ax = 0; ax < dims; ++ax) {
    std::size_t stride = 1;
    for (int k = ax + 1; k < dims; ++k) stride *= n;
    const std::size_t lines = total / n;
#pragma omp parallel
    {
      Eigen::VectorXd line(static_cast<Index>(n)), res(static_cast<Index>(n));
#pragma omp for schedule(static)
      for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t base = (l / stride) * stride * n + l % stride;
        for (std::size_t i = 0; i < n; ++i) line(static_cast<Index>(i)) = cur[base + i * stride];
        res.noalias() = m * line;
        for (std::size_t i = 0; i < n; ++i) next[base + i * stride] = res(static_cast<Index>(i));
      }
    }
    cur.swap(next);
  }
  return cur;
}

Eigen::MatrixXd kronecker_power(const Eigen::MatrixXd& m, int d) {
  if (d < 1) throw DomainError("kronecker_power needs d >= 1");
  Eigen::MatrixXd k = m;
  for (int i = 1; i < d; ++i) {
    Eigen::MatrixXd next(k.rows() * m.rows(), k.cols() * m.cols());
    for (Eigen::Index r = 0; r < k.rows(); ++r)
      for (Eigen::Index c = 0; c < k.cols(); ++c)
        next.block(r * m.rows(), c * m.cols(), m.rows(), m.cols()) = k(r, c) * m;
    k = std::move(next);
  }
  return k;
}

double relative_l2(std::span<const double> x, std::span<const double> ref) {
  if (x.size() != ref.size()) throw ShapeError("relative_l2: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - ref[i]) * (x[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace jacfast::reference
