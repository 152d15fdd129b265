#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace jacfast {

// Parameter pair (a,b) of the Jacobi family; both must lie in (-1,1).
struct JacobiParams {
  double a;
  double b;

  JacobiParams(double a_, double b_);

  JacobiParams swapped() const { return {b, a}; }
  bool operator==(const JacobiParams&) const = default;
};

// Trigonometric Gauss-Jacobi rule: nodes t_k in (0,pi), weights w_k such that
// sum_k w_k g(t_k) integrates g over (0,pi) when g is a product of two
// modified Jacobi functions of degree < n.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// P_0..P_max_deg at x by the standard three-term recurrence (unnormalized).
std::vector<double> eval_jacobi_batch(const JacobiParams& p, int max_deg, double x);

// C_nu, the factor making the modified functions orthonormal on (0,pi).
double normalization_constant(const JacobiParams& p, std::int64_t nu);

// C_nu for real nu (nu = 0 or nu >= 1).
double normalization_constant_real(const JacobiParams& p, double nu);

// P~_nu(t) = C_nu P_nu(cos t) sin(t/2)^(a+1/2) cos(t/2)^(b+1/2).
double eval_modified_p(const JacobiParams& p, int nu, double t);

struct ValueDeriv {
  double value;
  double deriv;
};

ValueDeriv eval_modified_p_deriv(const JacobiParams& p, int nu, double t);

// Modified Jacobi function of real degree nu >= 1 and its t-derivative.
// Hypergeometric start at frac(nu) and frac(nu)+1, then upward recurrence in
// x = cos t; intended for the interior of (0,pi).
ValueDeriv modified_p_real_degree(const JacobiParams& p, double nu, double t);

// Evaluates P~_0..P~_max_deg at arbitrary t in (0,pi). The recurrence runs on
// the ratios P_n(x)/P_n(1) in difference form driven by u = sin^2(t/2), so t
// enters only through u and stays accurate near t = 0; t > pi/2 is handled by
// the reflection P~^(a,b)_n(t) = (-1)^n P~^(b,a)_n(pi - t).
class ModifiedJacobiEvaluator {
 public:
  ModifiedJacobiEvaluator(const JacobiParams& p, int max_deg);

  int max_degree() const { return max_deg_; }
  const JacobiParams& params() const { return params_; }

  // out[nu] = P~_nu(t) for nu < out.size() <= max_deg+1.
  void eval_all(double t, std::span<double> out) const;

  double eval(int nu, double t) const { return eval_triple(nu, t).value; }
  ValueDeriv eval_deriv(int nu, double t) const;

  // P~_nu, dP~_nu/dt and P~_{nu-1} at t (previous is 0 for nu = 0).
  struct Triple {
    double value;
    double deriv;
    double previous;
  };
  Triple eval_triple(int nu, double t) const;

 private:
  struct Side {
    // d_{n+1} = rb[n] d_n - 2u rc[n] r_n and r_{n+1} = r_n + d_{n+1}
    std::vector<double> rb, rc;
    std::vector<double> scale;  // C_n P_n(1)
    double d1 = 0.0;            // d_1 = d1 * u
    double a = 0.0, b = 0.0;
  };
  static Side make_side(double a, double b, int max_deg);

  JacobiParams params_;
  int max_deg_;
  Side lower_;  // (a,b), used for t <= pi/2
  Side upper_;  // (b,a), evaluated at pi - t
};

// Newton iteration on P~_n using the evaluator above, Bessel-zero and
// cosine initial guesses, weights by Christoffel-Darboux. O(n^2) work.
QuadratureRule gauss_jacobi_trig(const JacobiParams& p, int n);

// Orthonormal recurrence coefficient beta_n in x p_n = beta_{n+1} p_{n+1} + alpha_n p_n + beta_n p_{n-1}.
double orthonormal_beta(const JacobiParams& p, int n);

// Initial guess for the k-th root (1-based) of P~_n counted from t = 0.
double trig_root_guess(const JacobiParams& p, int n, int k);

}  // namespace jacfast
