#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "jacfast/special_fn.hpp"
#include "jacfast/transform1d.hpp"

namespace jacfast::reference {

// Dense n x n matrix with entries s_j P~_k(t_j), where s_j = sqrt(w_j) or 1
// when weights is empty. Built row by row from the recurrence.
Eigen::MatrixXd transform_matrix(const JacobiParams& p, std::span<const double> points,
                                 std::span<const double> weights);

// The same products without storing the matrix, O(n^2).
std::vector<double> forward(const JacobiParams& p, std::span<const double> points, std::span<const double> weights,
                            std::span<const double> alpha);
// Selected entries of the forward product, O(n) work per row.
std::vector<double> forward_rows(const JacobiParams& p, std::span<const double> points,
                                 std::span<const double> weights, std::span<const double> alpha,
                                 std::span<const std::size_t> rows);
// Transposed product J^T W g.
std::vector<double> inverse(const JacobiParams& p, std::span<const double> points, std::span<const double> weights,
                            std::span<const double> g);

// Plan-driven single-threaded fast transforms, for timing against the
// OpenMP kernels.
std::vector<double> forward_serial(const TransformPlan& plan, std::span<const double> alpha);
std::vector<double> inverse_serial(const TransformPlan& plan, std::span<const double> g);

// Applies the n x n matrix m along every axis of a row-major n^dims tensor,
// i.e. (m kron m [kron m]) x without forming the Kronecker product.
std::vector<double> apply_along_axes(const Eigen::MatrixXd& m, int dims, std::span<const double> x);

// Explicit Kronecker product of d copies of `m` (first factor slowest).
Eigen::MatrixXd kronecker_power(const Eigen::MatrixXd& m, int d);

double relative_l2(std::span<const double> x, std::span<const double> ref);

}  // namespace jacfast::reference
