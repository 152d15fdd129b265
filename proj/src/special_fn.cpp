#include "jacfast/special_fn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_pFq.hpp>

#include "jacfast/error.hpp"

namespace jacfast {

namespace bm = boost::math;
using std::numbers::pi;

JacobiParams::JacobiParams(double a_, double b_) : a(a_), b(b_) {
  if (!(a > -1.0 && a < 1.0) || !(b > -1.0 && b < 1.0)) {
    std::ostringstream os;
    os << "Jacobi parameters a and b must lie in the open interval (-1,1) (got a=" << a << ", b=" << b << ")";
    throw DomainError(os.str());
  }
}

std::vector<double> eval_jacobi_batch(const JacobiParams& p, int max_deg, double x) {
  if (max_deg < 0) throw DomainError("eval_jacobi_batch: max_deg must be >= 0");
  if (!(std::abs(x) < 1.0)) throw DomainError("eval_jacobi_batch: x must lie in (-1,1)");
  const double a = p.a, b = p.b;
  std::vector<double> out(static_cast<std::size_t>(max_deg) + 1);
  out[0] = 1.0;
  if (max_deg == 0) return out;
  out[1] = 0.5 * (a - b) + (1.0 + 0.5 * (a + b)) * x;
  for (int n = 1; n < max_deg; ++n) {
    const double s = 2.0 * n + a + b;
    const double c1 = 2.0 * (n + 1) * (n + a + b + 1) * s;
    const double c2 = (s + 1) * ((s + 2) * s * x + a * a - b * b);
    const double c3 = 2.0 * (n + a) * (n + b) * (s + 2);
    out[n + 1] = (c2 * out[n] - c3 * out[n - 1]) / c1;
  }
  return out;
}

double normalization_constant_real(const JacobiParams& p, double nu) {
  const double a = p.a, b = p.b;
  if (nu == 0.0) {
    return std::sqrt(bm::tgamma(a + b + 2) / (bm::tgamma(a + 1) * bm::tgamma(b + 1)));
  }
  if (!(nu >= 1.0)) throw DomainError("normalization constant needs nu = 0 or nu >= 1");
  // Gamma ratios directly rather than differences of log-gamma values
  const double r1 = bm::tgamma_delta_ratio(nu + 1, a);          // G(nu+1)/G(nu+a+1)
  const double r2 = bm::tgamma_delta_ratio(nu + a + b + 1, -a);  // G(nu+a+b+1)/G(nu+b+1)
  return std::sqrt((2 * nu + a + b + 1) * r1 * r2);
}

double normalization_constant(const JacobiParams& p, std::int64_t nu) {
  if (nu < 0) throw DomainError("normalization constant needs nu >= 0");
  return normalization_constant_real(p, static_cast<double>(nu));
}

double orthonormal_beta(const JacobiParams& p, int n) {
  const double a = p.a, b = p.b;
  if (n == 1) return 2.0 / (2 + a + b) * std::sqrt((1 + a) * (1 + b) / (3 + a + b));
  const double s = 2.0 * n + a + b;
  return 2.0 / s * std::sqrt(n * (n + a) * (n + b) * (n + a + b) / ((s - 1) * (s + 1)));
}

namespace {

void check_t(double t) {
  if (!(t > 0.0 && t < pi) || std::sin(0.5 * t) == 0.0 || std::cos(0.5 * t) == 0.0) {
    throw DomainError("modified Jacobi function needs 0 < t < pi");
  }
}

// C_n P_n(1) where P_n(1) = binom(n+a, n)
double endpoint_scale(double a, double b, int n) {
  const JacobiParams p(a, b);
  const double binom = 1.0 / (bm::tgamma_delta_ratio(n + 1.0, a) * bm::tgamma(a + 1));
  return normalization_constant(p, n) * binom;
}

}  // namespace

ModifiedJacobiEvaluator::Side ModifiedJacobiEvaluator::make_side(double a, double b, int max_deg) {
  Side s;
  s.a = a;
  s.b = b;
  s.d1 = -(2 + a + b) / (a + 1);
  s.rb.assign(static_cast<std::size_t>(std::max(max_deg, 1)), 0.0);
  s.rc.assign(s.rb.size(), 0.0);
  for (int n = 1; n < max_deg; ++n) {
    const double sn = 2.0 * n + a + b;
    const double A = (sn + 1) * (sn + 2) / (2.0 * (n + 1) * (n + a + b + 1));
    const double E = (n + a) * (n + b) * (sn + 2) / ((n + 1) * (n + a + b + 1) * sn);
    const double g0 = n / (n + a);
    const double g1 = (n + 1) / (n + 1 + a);
    s.rb[n] = E * g0 * g1;
    s.rc[n] = A * g1;
  }
  // exact anchors every 64 degrees, ratio updates in between
  s.scale.resize(static_cast<std::size_t>(max_deg) + 1);
  for (int n = 0; n <= max_deg; ++n) {
    if (n % 64 == 0) {
      s.scale[n] = endpoint_scale(a, b, n);
      continue;
    }
    const int m = n - 1;
    const double c2 = m == 0 ? (a + b + 3) / ((1 + a) * (1 + b))
                             : (2.0 * m + a + b + 3) / (2.0 * m + a + b + 1) * ((m + 1) * (m + 1 + a + b)) /
                                   ((m + 1 + a) * (m + 1 + b));
    s.scale[n] = s.scale[m] * std::sqrt(c2) * (m + 1 + a) / (m + 1);
  }
  return s;
}

ModifiedJacobiEvaluator::ModifiedJacobiEvaluator(const JacobiParams& p, int max_deg)
    : params_(p), max_deg_(max_deg) {
  if (max_deg < 0) throw DomainError("evaluator needs max_deg >= 0");
  lower_ = make_side(p.a, p.b, max_deg);
  upper_ = make_side(p.b, p.a, max_deg);
}

void ModifiedJacobiEvaluator::eval_all(double t, std::span<double> out) const {
  check_t(t);
  if (out.size() > static_cast<std::size_t>(max_deg_) + 1) throw ShapeError("eval_all: output longer than max_deg+1");
  if (out.empty()) return;
  const double sh = std::sin(0.5 * t), ch = std::cos(0.5 * t);
  const bool low = t <= 0.5 * pi;
  const Side& s = low ? lower_ : upper_;
  const double u = low ? sh * sh : ch * ch;
  const double w = std::pow(sh, params_.a + 0.5) * std::pow(ch, params_.b + 0.5);
  double r = 1.0;
  double d = s.d1 * u;
  out[0] = s.scale[0] * w;
  double sign = 1.0;
  for (std::size_t n = 1; n < out.size(); ++n) {
    if (n > 1) d = s.rb[n - 1] * d - 2.0 * u * s.rc[n - 1] * r;
    r += d;
    if (!low) sign = -sign;
    out[n] = sign * s.scale[n] * w * r;
  }
}

ModifiedJacobiEvaluator::Triple ModifiedJacobiEvaluator::eval_triple(int nu, double t) const {
  check_t(t);
  if (nu < 0 || nu > max_deg_) throw DomainError("evaluator: degree out of range");
  const double sh = std::sin(0.5 * t), ch = std::cos(0.5 * t);
  const bool low = t <= 0.5 * pi;
  const Side& s = low ? lower_ : upper_;
  const double u = low ? sh * sh : ch * ch;
  // r, dr/du for degrees nu and nu-1
  double r = 1.0, dr = 0.0, rp = 0.0;
  double d = s.d1 * u, dd = s.d1;
  for (int n = 1; n <= nu; ++n) {
    if (n > 1) {
      const double c = 2.0 * s.rc[n - 1];
      const double dnew = s.rb[n - 1] * d - u * c * r;
      dd = s.rb[n - 1] * dd - c * (r + u * dr);
      d = dnew;
    }
    rp = r;
    r += d;
    dr += dd;
  }
  const double w = std::pow(sh, params_.a + 0.5) * std::pow(ch, params_.b + 0.5);
  // log-derivative of w in t
  const double lw = 0.5 * (params_.a + 0.5) * ch / sh - 0.5 * (params_.b + 0.5) * sh / ch;
  const double sgn = (!low && (nu % 2 != 0)) ? -1.0 : 1.0;
  const double dudt = low ? sh * ch : -sh * ch;
  Triple out;
  out.value = sgn * s.scale[nu] * w * r;
  out.deriv = sgn * s.scale[nu] * w * (r * lw + dr * dudt);
  // degree nu-1 carries the opposite reflection sign
  out.previous = nu == 0 ? 0.0 : (low ? 1.0 : -sgn) * s.scale[nu - 1] * w * rp;
  return out;
}

ValueDeriv ModifiedJacobiEvaluator::eval_deriv(int nu, double t) const {
  const Triple tr = eval_triple(nu, t);
  return {tr.value, tr.deriv};
}

double eval_modified_p(const JacobiParams& p, int nu, double t) {
  if (nu < 0) throw DomainError("eval_modified_p: degree must be >= 0");
  return ModifiedJacobiEvaluator(p, nu).eval(nu, t);
}

ValueDeriv eval_modified_p_deriv(const JacobiParams& p, int nu, double t) {
  if (nu < 0) throw DomainError("eval_modified_p_deriv: degree must be >= 0");
  return ModifiedJacobiEvaluator(p, nu).eval_deriv(nu, t);
}

ValueDeriv modified_p_real_degree(const JacobiParams& p, double nu, double t) {
  check_t(t);
  if (!(nu >= 1.0)) throw DomainError("modified_p_real_degree needs nu >= 1");
  const double a = p.a, b = p.b;
  const double x = std::cos(t);
  const double z = std::sin(0.5 * t) * std::sin(0.5 * t);  // (1-x)/2
  const double nu0 = nu - std::floor(nu);
  auto start = [&](double m) {
    const double lead = 1.0 / (bm::tgamma_delta_ratio(m + 1, a) * bm::tgamma(a + 1));
    return lead * bm::hypergeometric_pFq({-m, m + a + b + 1}, {a + 1}, z);
  };
  double pm = start(nu0);
  double pc = start(nu0 + 1);
  const long steps = std::lround(std::floor(nu)) - 1;
  double m = nu0 + 1;
  for (long i = 0; i < steps; ++i, m += 1.0) {
    const double s = 2.0 * m + a + b;
    const double c1 = 2.0 * (m + 1) * (m + a + b + 1) * s;
    const double c2 = (s + 1) * ((s + 2) * s * x + a * a - b * b);
    const double c3 = 2.0 * (m + a) * (m + b) * (s + 2);
    const double nx = (c2 * pc - c3 * pm) / c1;
    pm = pc;
    pc = nx;
  }
  // (2nu+a+b)(1-x^2) P' = nu[(a-b) - (2nu+a+b)x] P_nu + 2(nu+a)(nu+b) P_{nu-1}
  const double s = 2.0 * nu + a + b;
  const double dpdx = (nu * ((a - b) - s * x) * pc + 2.0 * (nu + a) * (nu + b) * pm) / (s * (1 - x * x));
  const double sh = std::sin(0.5 * t), ch = std::cos(0.5 * t);
  const double w = std::pow(sh, a + 0.5) * std::pow(ch, b + 0.5);
  const double lw = 0.5 * (a + 0.5) * ch / sh - 0.5 * (b + 0.5) * sh / ch;
  const double c = normalization_constant_real(p, nu);
  return {c * pc * w, c * w * (-std::sin(t) * dpdx + pc * lw)};
}

double trig_root_guess(const JacobiParams& p, int n, int k) {
  const double nt = n + 0.5 * (p.a + p.b + 1);
  if (k <= 10) return bm::cyl_bessel_j_zero(p.a, k) / nt;
  return (k + 0.5 * p.a - 0.25) * pi / nt;
}

QuadratureRule gauss_jacobi_trig(const JacobiParams& p, int n) {
  if (n < 1) throw DomainError("gauss_jacobi_trig needs n >= 1");
  const ModifiedJacobiEvaluator ev(p, n);
  const double nt = n + 0.5 * (p.a + p.b + 1);
  // nodes whose cosine guess falls below pi/2 are seeded from t = 0, the rest from t = pi
  int n_lo = 0;
  for (int k = 1; k <= n; ++k) {
    if ((k + 0.5 * p.a - 0.25) * pi / nt < 0.5 * pi) n_lo = k;
  }
  const JacobiParams q = p.swapped();
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double beta = orthonormal_beta(p, n);
  bool failed = false;
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    double t = i < n_lo ? trig_root_guess(p, n, i + 1) : pi - trig_root_guess(q, n, n - i);
    int it = 0;
    for (; it < 50; ++it) {
      const auto vd = ev.eval_deriv(n, t);
      const double step = vd.value / vd.deriv;
      double tn = t - step;
      if (!(tn > 0.0 && tn < pi)) tn = tn <= 0.0 ? 0.5 * t : 0.5 * (t + pi);
      // quadratic convergence: once the step is this small the next error is at rounding level
      const bool done = std::abs(tn - t) <= 1e-11 * std::min(t, pi - t);
      t = tn;
      if (done) break;
    }
    if (it == 50) {
#pragma omp atomic write
      failed = true;
    }
    const auto tr = ev.eval_triple(n, t);
    rule.nodes[i] = t;
    rule.weights[i] = -std::sin(t) / (beta * tr.deriv * tr.previous);
  }
  if (failed) throw NumericalError("gauss_jacobi_trig: Newton iteration exceeded 50 steps");
  for (int i = 0; i < n; ++i) {
    if ((i > 0 && !(rule.nodes[i] > rule.nodes[i - 1])) || !(rule.weights[i] > 0.0)) {
      throw NumericalError("gauss_jacobi_trig: Newton converged to a duplicate or misordered root");
    }
  }
  return rule;
}

}  // namespace jacfast
