#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace jacfast::cheb {

// Closed Chebyshev points -cos(j pi/(k-1)) on [-1,1], ascending.
std::vector<double> points(int k);

// Points mapped to [lo,hi].
std::vector<double> points(int k, double lo, double hi);

// Barycentric weights for closed Chebyshev points: (-1)^j, halved at the ends.
std::vector<double> bary_weights(int k);

// Lagrange basis values l_j(x) for the given nodes; exact unit vector when x
// coincides with a node.
void lagrange_basis(std::span<const double> nodes, std::span<const double> weights, double x,
                    std::span<double> out);

double interpolate(std::span<const double> nodes, std::span<const double> weights,
                   std::span<const double> values, double x);

// S(i,j) = integral from `anchor` to x_i of l_j, on [-1,1].
Eigen::MatrixXd integration_matrix(int k, double anchor);

// D(i,j) = l_j'(x_i) on [-1,1].
Eigen::MatrixXd differentiation_matrix(int k);

// values at closed points -> Chebyshev coefficients.
Eigen::MatrixXd coefficient_matrix(int k);

}  // namespace jacfast::cheb
