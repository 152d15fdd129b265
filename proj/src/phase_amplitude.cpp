#include "jacfast/phase_amplitude.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "jacfast/binary_io.hpp"
#include "jacfast/chebyshev.hpp"
#include "jacfast/error.hpp"

namespace jacfast {

using std::numbers::pi;

namespace {

constexpr int kT = ChebyshevGridSpec::kTPanel;
constexpr int kNu = ChebyshevGridSpec::kNuPanel;

std::vector<double> panel_nodes(const std::vector<double>& breaks, int k) {
  std::vector<double> nodes;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const auto x = cheb::points(k, breaks[i], breaks[i + 1]);
    nodes.insert(nodes.end(), x.begin() + (i == 0 ? 0 : 1), x.end());
  }
  return nodes;
}

int panel_of(const std::vector<double>& breaks, double x) {
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  const int i = static_cast<int>(it - breaks.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(breaks.size()) - 2);
}

const std::vector<double>& unit_bary(int k) {
  static const std::vector<double> w16 = cheb::bary_weights(kT);
  static const std::vector<double> w24 = cheb::bary_weights(kNu);
  return k == kT ? w16 : w24;
}

}  // namespace

int ChebyshevGridSpec::t_panel_of(double t) const { return panel_of(t_breaks, t); }
int ChebyshevGridSpec::nu_panel_of(double nu) const { return panel_of(nu_breaks, nu); }

ChebyshevGridSpec build_grid_spec(std::int64_t n_max) {
  if (n_max <= 27) throw DomainError("grid needs n_max > 27");
  ChebyshevGridSpec s;
  s.n_max = n_max;
  const double inv = 1.0 / static_cast<double>(n_max);
  int l = 1;
  while ((pi / 2) * std::ldexp(1.0, 1 - l) > inv) ++l;
  s.m_t = 2 * l;
  // half-octave offset keeps pi/2 inside the middle panel instead of on a break
  std::vector<double> lower(l);
  for (int i = 1; i <= l; ++i) lower[i - 1] = (pi / 2) * std::pow(2.0, i - l - 0.5);
  s.t_breaks = lower;
  for (int i = l - 1; i >= 0; --i) s.t_breaks.push_back(pi - lower[i]);

  int m = 1;
  double p3 = 3.0;
  while (p3 < static_cast<double>(n_max)) {
    p3 *= 3.0;
    ++m;
  }
  s.m_nu = std::max(m, 2);
  const double ratio = static_cast<double>(n_max) / ChebyshevGridSpec::kNuMin;
  for (int j = 0; j < s.m_nu; ++j) {
    s.nu_breaks.push_back(ChebyshevGridSpec::kNuMin * std::pow(ratio, static_cast<double>(j) / (s.m_nu - 1)));
  }
  s.nu_breaks.front() = ChebyshevGridSpec::kNuMin;
  s.nu_breaks.back() = static_cast<double>(n_max);
  s.t_nodes = panel_nodes(s.t_breaks, kT);
  s.nu_nodes = panel_nodes(s.nu_breaks, kNu);
  return s;
}

double amplitude_ode_coefficient(const JacobiParams& p, double nu, double t) {
  if (!(t > 0.0 && t < pi)) throw DomainError("amplitude_ode_coefficient needs 0 < t < pi");
  const double nt = nu + 0.5 * (p.a + p.b + 1);
  const double sh = std::sin(0.5 * t), ch = std::cos(0.5 * t);
  return nt * nt + (0.25 - p.a * p.a) / (4 * sh * sh) + (0.25 - p.b * p.b) / (4 * ch * ch);
}

double amplitude_ode_coefficient_deriv(const JacobiParams& p, double, double t) {
  if (!(t > 0.0 && t < pi)) throw DomainError("amplitude_ode_coefficient needs 0 < t < pi");
  const double sh = std::sin(0.5 * t), ch = std::cos(0.5 * t);
  const double A = (0.25 - p.a * p.a) / 4, B = (0.25 - p.b * p.b) / 4;
  return -A * ch / (sh * sh * sh) + B * sh / (ch * ch * ch);
}

namespace {

// Truncated Taylor series in s = t - pi/2.
constexpr int kKummerIters = 12;
constexpr int kDeg = 2 + 2 * kKummerIters + 2;
using Series = std::array<double, kDeg>;

Series smul(const Series& x, const Series& y) {
  Series z{};
  for (int i = 0; i < kDeg; ++i)
    for (int j = 0; j <= i; ++j) z[i] += x[j] * y[i - j];
  return z;
}

Series sdiv(const Series& x, const Series& y) {
  Series z{};
  for (int i = 0; i < kDeg; ++i) {
    double acc = x[i];
    for (int j = 0; j < i; ++j) acc -= z[j] * y[i - j];
    z[i] = acc / y[0];
  }
  return z;
}

Series ssqrt(const Series& x) {
  Series z{};
  z[0] = std::sqrt(x[0]);
  for (int i = 1; i < kDeg; ++i) {
    double acc = x[i];
    for (int j = 1; j < i; ++j) acc -= z[j] * z[i - j];
    z[i] = acc / (2 * z[0]);
  }
  return z;
}

Series sder(const Series& x) {
  Series z{};
  for (int i = 0; i + 1 < kDeg; ++i) z[i] = (i + 1) * x[i + 1];
  return z;
}

struct Wkb {
  double n, dn, d2n;
};

// Kummer fixed point r = sqrt(q - r''/(2r) + 3/4 (r'/r)^2) at t = pi/2;
// N = 1/r is the unit-Wronskian amplitude squared.
Wkb wkb_at_half_pi(const JacobiParams& p, double nu) {
  Series sins{}, one{};
  one[0] = 1.0;
  double fact = 1.0;
  for (int i = 1; i < kDeg; ++i) {
    fact *= i;
    if (i % 2 == 1) sins[i] = (((i - 1) / 2) % 2 == 0 ? 1.0 : -1.0) / fact;
  }
  Series plus = one, minus = one;
  for (int i = 0; i < kDeg; ++i) {
    plus[i] += sins[i];
    minus[i] -= sins[i];
  }
  const double nt = nu + 0.5 * (p.a + p.b + 1);
  const double A = (0.25 - p.a * p.a) / 2, B = (0.25 - p.b * p.b) / 2;
  const Series ip = sdiv(one, plus), im = sdiv(one, minus);
  Series q{};
  for (int i = 0; i < kDeg; ++i) q[i] = A * ip[i] + B * im[i];
  q[0] += nt * nt;
  Series r = ssqrt(q);
  for (int it = 0; it < kKummerIters; ++it) {
    const Series r1 = sder(r), r2 = sder(r1);
    const Series lr = sdiv(r1, r), hr = sdiv(r2, r);
    const Series lr2 = smul(lr, lr);
    Series arg{};
    for (int i = 0; i < kDeg; ++i) arg[i] = q[i] - 0.5 * hr[i] + 0.75 * lr2[i];
    r = ssqrt(arg);
  }
  const Series nser = sdiv(one, r);
  return {nser[0], nser[1], 2 * nser[2]};
}

// Integration operators on one 16-point panel, from the left end, the right
// end and the centre, with their squares and cubes.
struct PanelOps {
  Eigen::MatrixXd s[3], s2[3], s3[3];
  std::vector<double> x;
  PanelOps() : x(cheb::points(kT)) {
    const double anchors[3] = {-1.0, 1.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      s[i] = cheb::integration_matrix(kT, anchors[i]);
      s2[i] = s[i] * s[i];
      s3[i] = s2[i] * s[i];
    }
  }
};

const PanelOps& panel_ops() {
  static const PanelOps ops;
  return ops;
}

enum Anchor { kLeft = 0, kRight = 1, kCentre = 2 };

struct PanelResult {
  Eigen::VectorXd n, dn, d2n, d3n;
};

// Collocation for sigma = N''' with N, N', N'' prescribed at the anchor.
PanelResult solve_panel(const JacobiParams& p, double nu, double lo, double hi, Anchor anchor, double n0,
                        double n1, double n2) {
  const auto& ops = panel_ops();
  const double h = 0.5 * (hi - lo), c = 0.5 * (hi + lo);
  const double ta = anchor == kLeft ? lo : anchor == kRight ? hi : c;
  Eigen::VectorXd q(kT), dq(kT), d(kT);
  for (int i = 0; i < kT; ++i) {
    const double t = (i == 0) ? lo : (i == kT - 1) ? hi : c + h * ops.x[i];
    q(i) = amplitude_ode_coefficient(p, nu, t);
    dq(i) = amplitude_ode_coefficient_deriv(p, nu, t);
    d(i) = t - ta;
  }
  const Eigen::MatrixXd S = h * ops.s[anchor];
  const Eigen::MatrixXd S2 = (h * h) * ops.s2[anchor];
  const Eigen::MatrixXd S3 = (h * h * h) * ops.s3[anchor];
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(kT, kT);
  A.noalias() += 4.0 * q.asDiagonal() * S2;
  A.noalias() += 2.0 * dq.asDiagonal() * S3;
  const Eigen::VectorXd base1 = (n1 + n2 * d.array()).matrix();
  const Eigen::VectorXd base0 = (n0 + n1 * d.array() + 0.5 * n2 * d.array().square()).matrix();
  const Eigen::VectorXd rhs = -(4.0 * q.cwiseProduct(base1) + 2.0 * dq.cwiseProduct(base0));
  const Eigen::VectorXd sigma = A.partialPivLu().solve(rhs);
  PanelResult r;
  r.d3n = sigma;
  r.d2n = (n2 + (S * sigma).array()).matrix();
  r.dn = base1 + S2 * sigma;
  r.n = base0 + S3 * sigma;
  return r;
}

void store(AmplitudeSolution& sol, int panel, const PanelResult& r, double scale) {
  for (int i = 0; i < kT; ++i) {
    const std::size_t g = static_cast<std::size_t>(panel) * (kT - 1) + i;
    sol.n[g] = scale * r.n(i);
    sol.dn[g] = scale * r.dn(i);
    sol.d2n[g] = scale * r.d2n(i);
    sol.d3n[g] = scale * r.d3n(i);
  }
}

std::string context(const JacobiParams& p, double nu) {
  std::ostringstream os;
  os.precision(17);
  os << " (a=" << p.a << ", b=" << p.b << ", nu=" << nu << ")";
  return os.str();
}

}  // namespace

AmplitudeSolution solve_amplitude(const JacobiParams& p, double nu, const ChebyshevGridSpec& spec) {
  if (!(nu >= ChebyshevGridSpec::kNuMin && nu <= static_cast<double>(spec.n_max))) {
    throw DomainError("solve_amplitude: nu outside [27, n_max]" + context(p, nu));
  }
  const Wkb w = wkb_at_half_pi(p, nu);
  if (!(w.n > 0.0) || !std::isfinite(w.dn) || !std::isfinite(w.d2n)) {
    throw NumericalError("solve_amplitude: initial data not finite" + context(p, nu));
  }
  // P~ = A sqrt(N1) cos(theta) with theta' = 1/N1 fixes A and theta at pi/2
  const ValueDeriv pv = modified_p_real_degree(p, nu, 0.5 * pi);
  const double sq = std::sqrt(w.n);
  const double X = pv.value / sq;
  const double Y = sq * (0.5 * w.dn / w.n * pv.value - pv.deriv);
  const double A2 = X * X + Y * Y;

  AmplitudeSolution sol;
  sol.nu = nu;
  sol.wronskian = A2;
  sol.anchor_phase = std::atan2(Y, X);
  const std::size_t M = spec.t_nodes.size();
  sol.n.assign(M, 0.0);
  sol.dn.assign(M, 0.0);
  sol.d2n.assign(M, 0.0);
  sol.d3n.assign(M, 0.0);

  const int mid = spec.m_t / 2 - 1;
  const auto& br = spec.t_breaks;
  const PanelResult centre = solve_panel(p, nu, br[mid], br[mid + 1], kCentre, w.n, w.dn, w.d2n);
  store(sol, mid, centre, A2);
  PanelResult cur = centre;
  for (int i = mid + 1; i < spec.t_panels(); ++i) {
    cur = solve_panel(p, nu, br[i], br[i + 1], kLeft, cur.n(kT - 1), cur.dn(kT - 1), cur.d2n(kT - 1));
    store(sol, i, cur, A2);
  }
  cur = centre;
  for (int i = mid - 1; i >= 0; --i) {
    cur = solve_panel(p, nu, br[i], br[i + 1], kRight, cur.n(0), cur.dn(0), cur.d2n(0));
    store(sol, i, cur, A2);
  }
  for (std::size_t i = 0; i < M; ++i) {
    if (!(sol.n[i] > 0.0) || !std::isfinite(sol.n[i])) {
      throw NumericalError("solve_amplitude: amplitude lost positivity" + context(p, nu));
    }
  }
  return sol;
}

double amplitude_ode_residual(const JacobiParams& p, const ChebyshevGridSpec& spec, const AmplitudeSolution& sol) {
  const auto& w = unit_bary(kT);
  double worst = 0.0;
  std::vector<double> nodes(kT), basis(kT);
  for (int pnl = 0; pnl < spec.t_panels(); ++pnl) {
    const std::size_t off = static_cast<std::size_t>(pnl) * (kT - 1);
    std::copy_n(spec.t_nodes.begin() + off, kT, nodes.begin());
    double res = 0.0, scale = 0.0;
    for (int i = 0; i < 2 * kT - 1; ++i) {
      const double t = (i % 2 == 0) ? nodes[i / 2] : 0.5 * (nodes[i / 2] + nodes[i / 2 + 1]);
      cheb::lagrange_basis(nodes, w, t, basis);
      double n = 0, dn = 0, d3n = 0;
      for (int j = 0; j < kT; ++j) {
        n += basis[j] * sol.n[off + j];
        dn += basis[j] * sol.dn[off + j];
        d3n += basis[j] * sol.d3n[off + j];
      }
      const double q = amplitude_ode_coefficient(p, sol.nu, t);
      const double dq = amplitude_ode_coefficient_deriv(p, sol.nu, t);
      res = std::max(res, std::abs(d3n + 4 * q * dn + 2 * dq * n));
      scale = std::max(scale, std::abs(d3n) + 4 * std::abs(q * dn) + 2 * std::abs(dq * n));
    }
    if (scale > 0.0) worst = std::max(worst, res / scale);
  }
  return worst;
}

std::vector<double> compute_phase(const JacobiParams& p, const ChebyshevGridSpec& spec, const AmplitudeSolution& sol) {
  const std::size_t M = spec.t_nodes.size();
  if (sol.n.size() != M) throw ShapeError("compute_phase: amplitude does not match the grid");
  for (double v : sol.n) {
    if (!(v > 0.0)) throw DomainError("compute_phase: amplitude must be positive");
  }
  const double nt = sol.nu + 0.5 * (p.a + p.b + 1);
  const double target = nt * pi / 2 - (2 * p.a + 1) * pi / 4;
  const double psi0 = sol.anchor_phase + 2 * pi * std::round((target - sol.anchor_phase) / (2 * pi));

  const auto& ops = panel_ops();
  std::vector<double> psi(M, 0.0);
  const auto& br = spec.t_breaks;
  Eigen::VectorXd f(kT);
  auto integrate = [&](int pnl, Anchor anchor, double start) {
    const std::size_t off = static_cast<std::size_t>(pnl) * (kT - 1);
    for (int i = 0; i < kT; ++i) f(i) = sol.wronskian / sol.n[off + i];
    const double h = 0.5 * (br[pnl + 1] - br[pnl]);
    const Eigen::VectorXd v = h * (ops.s[anchor] * f);
    for (int i = 0; i < kT; ++i) psi[off + i] = start + v(i);
  };
  const int mid = spec.m_t / 2 - 1;
  integrate(mid, kCentre, psi0);
  for (int i = mid + 1; i < spec.t_panels(); ++i) integrate(i, kLeft, psi[static_cast<std::size_t>(i) * (kT - 1)]);
  for (int i = mid - 1; i >= 0; --i) integrate(i, kRight, psi[static_cast<std::size_t>(i + 1) * (kT - 1)]);
  return psi;
}

PhaseAmplitudeTable::PhaseAmplitudeTable(JacobiParams p, ChebyshevGridSpec spec, Eigen::MatrixXd psi,
                                         Eigen::MatrixXd amp, std::vector<double> wronskian)
    : params_(p), spec_(std::move(spec)), psi_(std::move(psi)), amp_(std::move(amp)), wronskian_(std::move(wronskian)) {
  const auto mt = static_cast<Eigen::Index>(spec_.t_nodes.size());
  const auto mn = static_cast<Eigen::Index>(spec_.nu_nodes.size());
  if (psi_.rows() != mt || psi_.cols() != mn || amp_.rows() != mt || amp_.cols() != mn ||
      static_cast<Eigen::Index>(wronskian_.size()) != mn) {
    throw ShapeError("phase/amplitude table arrays do not match the grid");
  }
}

bool PhaseAmplitudeTable::contains(double t, double nu) const {
  return t >= spec_.t_min() && t <= spec_.t_max() && nu >= ChebyshevGridSpec::kNuMin &&
         nu <= static_cast<double>(spec_.n_max);
}

namespace {

void check_range(const PhaseAmplitudeTable& tb, double t, double nu) {
  if (!tb.contains(t, nu)) {
    std::ostringstream os;
    os.precision(17);
    os << "point (t=" << t << ", nu=" << nu << ") outside the table range t in [" << tb.spec().t_min() << ", "
       << tb.spec().t_max() << "], nu in [27, " << tb.n_max() << "]";
    throw DomainError(os.str());
  }
}

}  // namespace

PhaseAmp PhaseAmplitudeTable::eval(double t, double nu) const {
  check_range(*this, t, nu);
  const int it = spec_.t_panel_of(t), inu = spec_.nu_panel_of(nu);
  const std::size_t to = static_cast<std::size_t>(it) * (kT - 1), no = static_cast<std::size_t>(inu) * (kNu - 1);
  std::array<double, kT> bt;
  std::array<double, kNu> bn;
  cheb::lagrange_basis(std::span(spec_.t_nodes).subspan(to, kT), unit_bary(kT), t, bt);
  cheb::lagrange_basis(std::span(spec_.nu_nodes).subspan(no, kNu), unit_bary(kNu), nu, bn);
  double ps = 0.0, am = 0.0;
  for (int j = 0; j < kNu; ++j) {
    double cp = 0.0, ca = 0.0;
    for (int i = 0; i < kT; ++i) {
      cp += bt[i] * psi_(to + i, no + j);
      ca += bt[i] * amp_(to + i, no + j);
    }
    ps += bn[j] * cp;
    am += bn[j] * ca;
  }
  return {ps, am};
}

double PhaseAmplitudeTable::wronskian_at(double nu) const {
  check_range(*this, spec_.t_min(), nu);
  const int inu = spec_.nu_panel_of(nu);
  const std::size_t no = static_cast<std::size_t>(inu) * (kNu - 1);
  return cheb::interpolate(std::span(spec_.nu_nodes).subspan(no, kNu), unit_bary(kNu),
                           std::span(wronskian_).subspan(no, kNu), nu);
}

PhaseAmp eval_phase_amplitude(const PhaseAmplitudeTable& table, double t, double nu) { return table.eval(t, nu); }

PhaseAmplitudeTable build_table(const JacobiParams& p, std::int64_t n_max) {
  ChebyshevGridSpec spec = build_grid_spec(n_max);
  const auto mt = static_cast<Eigen::Index>(spec.t_nodes.size());
  const auto mn = static_cast<Eigen::Index>(spec.nu_nodes.size());
  Eigen::MatrixXd psi(mt, mn), amp(mt, mn);
  std::vector<double> wr(static_cast<std::size_t>(mn));
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index j = 0; j < mn; ++j) {
    try {
      const AmplitudeSolution sol = solve_amplitude(p, spec.nu_nodes[j], spec);
      const auto ps = compute_phase(p, spec, sol);
      for (Eigen::Index i = 0; i < mt; ++i) {
        psi(i, j) = ps[i];
        amp(i, j) = std::sqrt(sol.n[i]);
      }
      wr[j] = sol.wronskian;
    } catch (...) {
#pragma omp critical(jacfast_table_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return PhaseAmplitudeTable(p, std::move(spec), std::move(psi), std::move(amp), std::move(wr));
}

NuSlice::NuSlice(const PhaseAmplitudeTable& table, double nu) : spec_(&table.spec()), nu_(nu) {
  check_range(table, spec_->t_min(), nu);
  w_ = table.wronskian_at(nu);
  const int inu = spec_->nu_panel_of(nu);
  const std::size_t no = static_cast<std::size_t>(inu) * (kNu - 1);
  std::array<double, kNu> bn;
  cheb::lagrange_basis(std::span(spec_->nu_nodes).subspan(no, kNu), unit_bary(kNu), nu, bn);
  const auto mt = spec_->t_nodes.size();
  psi_.resize(mt);
  amp_.resize(mt);
  for (std::size_t i = 0; i < mt; ++i) {
    double cp = 0.0, ca = 0.0;
    for (int j = 0; j < kNu; ++j) {
      cp += bn[j] * table.psi()(i, no + j);
      ca += bn[j] * table.amp()(i, no + j);
    }
    psi_[i] = cp;
    amp_[i] = ca;
  }
}

PhaseAmp NuSlice::eval(double t) const {
  if (!(t >= spec_->t_min() && t <= spec_->t_max())) throw DomainError("NuSlice: t outside the table range");
  const int it = spec_->t_panel_of(t);
  const std::size_t to = static_cast<std::size_t>(it) * (kT - 1);
  std::array<double, kT> bt;
  cheb::lagrange_basis(std::span(spec_->t_nodes).subspan(to, kT), unit_bary(kT), t, bt);
  double ps = 0.0, am = 0.0;
  for (int i = 0; i < kT; ++i) {
    ps += bt[i] * psi_[to + i];
    am += bt[i] * amp_[to + i];
  }
  return {ps, am};
}

double NuSlice::dpsi(double t) const {
  const double m = eval(t).amp;
  return w_ / (m * m);
}

TSlice::TSlice(const PhaseAmplitudeTable& table, double t) : spec_(&table.spec()), t_(t) {
  check_range(table, t, ChebyshevGridSpec::kNuMin);
  const int it = spec_->t_panel_of(t);
  const std::size_t to = static_cast<std::size_t>(it) * (kT - 1);
  std::array<double, kT> bt;
  cheb::lagrange_basis(std::span(spec_->t_nodes).subspan(to, kT), unit_bary(kT), t, bt);
  const auto mn = spec_->nu_nodes.size();
  psi_.resize(mn);
  amp_.resize(mn);
  for (std::size_t j = 0; j < mn; ++j) {
    double cp = 0.0, ca = 0.0;
    for (int i = 0; i < kT; ++i) {
      cp += bt[i] * table.psi()(to + i, j);
      ca += bt[i] * table.amp()(to + i, j);
    }
    psi_[j] = cp;
    amp_[j] = ca;
  }
}

PhaseAmp TSlice::eval(double nu) const {
  if (!(nu >= ChebyshevGridSpec::kNuMin && nu <= static_cast<double>(spec_->n_max))) {
    throw DomainError("TSlice: nu outside the table range");
  }
  const int inu = spec_->nu_panel_of(nu);
  const std::size_t no = static_cast<std::size_t>(inu) * (kNu - 1);
  std::array<double, kNu> bn;
  cheb::lagrange_basis(std::span(spec_->nu_nodes).subspan(no, kNu), unit_bary(kNu), nu, bn);
  double ps = 0.0, am = 0.0;
  for (int j = 0; j < kNu; ++j) {
    ps += bn[j] * psi_[no + j];
    am += bn[j] * amp_[no + j];
  }
  return {ps, am};
}

QuadratureRule gauss_jacobi_trig_table(const PhaseAmplitudeTable& table, int n) {
  const JacobiParams& p = table.params();
  if (n - 1 < ChebyshevGridSpec::kNuMin || n > table.n_max()) {
    throw DomainError("table quadrature needs 28 <= n <= n_max");
  }
  const NuSlice sn(table, n);
  const auto& spec = table.spec();
  const double lo = spec.t_min(), hi = spec.t_max();
  const double psi_lo = sn.eval(lo).psi, psi_hi = sn.eval(hi).psi;
  const auto m_first = static_cast<long>(std::ceil((psi_lo - pi / 2) / pi));
  const auto m_last = static_cast<long>(std::floor((psi_hi - pi / 2) / pi));
  if (m_last - m_first + 1 != n) {
    std::ostringstream os;
    os << "table t-range holds " << (m_last - m_first + 1) << " of the " << n
       << " quadrature roots; a larger n_max is needed";
    throw NumericalError(os.str());
  }
  const auto& nodes = spec.t_nodes;
  const auto& pn = sn.psi_nodes();
  const double w = sn.wronskian();
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < n; ++k) {
    const long m = m_first + k;
    const double target = pi / 2 + static_cast<double>(m) * pi;
    // bracket from the monotone node values
    const auto it = std::upper_bound(pn.begin(), pn.end(), target);
    std::size_t i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - pn.begin(), 1, nodes.size() - 1));
    double a = nodes[i - 1], b = nodes[i];
    double t = a + (b - a) * (target - pn[i - 1]) / (pn[i] - pn[i - 1]);
    int iter = 0;
    for (; iter < 50; ++iter) {
      const auto v = sn.eval(t);
      const double g = v.psi - target;
      if (g == 0.0) break;
      if (g > 0) b = t; else a = t;
      double tn = t - g * v.amp * v.amp / w;
      if (!(tn >= a && tn <= b)) tn = 0.5 * (a + b);
      const bool done = std::abs(tn - t) <= 1e-11 * std::min(t, pi - t) ||
                        std::abs(g) <= 4e-16 * std::abs(target) || b - a <= 4e-16 * b;
      t = tn;
      if (done) break;
    }
    if (iter == 50) {
#pragma omp atomic write
      failed = true;
    }
    const double amp = sn.eval(t).amp;
    rule.nodes[k] = t;
    rule.weights[k] = pi * amp * amp / w;
  }
  if (failed) throw NumericalError("table quadrature: root iteration did not converge");
  if (p.a == p.b) {
    for (int k = 0; k < n / 2; ++k) {
      const int j = n - 1 - k;
      const double t = 0.5 * (rule.nodes[k] + (pi - rule.nodes[j]));
      const double wk = 0.5 * (rule.weights[k] + rule.weights[j]);
      rule.nodes[k] = t;
      rule.nodes[j] = pi - t;
      rule.weights[k] = rule.weights[j] = wk;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = pi / 2;
  }
  for (int k = 0; k < n; ++k) {
    if ((k > 0 && !(rule.nodes[k] > rule.nodes[k - 1])) || !(rule.weights[k] > 0.0)) {
      throw NumericalError("table quadrature produced misordered nodes or nonpositive weights");
    }
  }
  return rule;
}

namespace {
constexpr std::uint32_t kTableVersion = 1;
}

void save_table(const PhaseAmplitudeTable& table, std::ostream& os) {
  const auto& s = table.spec();
  io::write_magic(os, "JPAT");
  io::write_u32(os, kTableVersion);
  io::write_f64(os, table.params().a);
  io::write_f64(os, table.params().b);
  io::write_u64(os, static_cast<std::uint64_t>(s.n_max));
  io::write_u32(os, static_cast<std::uint32_t>(s.m_t));
  io::write_u32(os, static_cast<std::uint32_t>(s.m_nu));
  io::write_f64s(os, s.t_breaks);
  io::write_f64s(os, s.nu_breaks);
  io::write_u64(os, s.t_nodes.size());
  io::write_u64(os, s.nu_nodes.size());
  io::write_f64s(os, s.t_nodes);
  io::write_f64s(os, s.nu_nodes);
  for (Eigen::Index i = 0; i < table.psi().rows(); ++i)
    for (Eigen::Index j = 0; j < table.psi().cols(); ++j) io::write_f64(os, table.psi()(i, j));
  for (Eigen::Index i = 0; i < table.amp().rows(); ++i)
    for (Eigen::Index j = 0; j < table.amp().cols(); ++j) io::write_f64(os, table.amp()(i, j));
  io::write_f64s(os, table.wronskian());
}

PhaseAmplitudeTable load_table(std::istream& is) {
  io::expect_magic(is, "JPAT");
  if (io::read_u32(is) != kTableVersion) throw IoError("unsupported JPAT version");
  const double a = io::read_f64(is), b = io::read_f64(is);
  const JacobiParams p(a, b);
  ChebyshevGridSpec s;
  s.n_max = static_cast<std::int64_t>(io::read_u64(is));
  s.m_t = static_cast<int>(io::read_u32(is));
  s.m_nu = static_cast<int>(io::read_u32(is));
  if (s.n_max <= 27 || s.m_t < 2 || s.m_nu < 2 || s.m_t > 256 || s.m_nu > 256) throw IoError("corrupt JPAT header");
  s.t_breaks.resize(s.m_t);
  s.nu_breaks.resize(s.m_nu);
  io::read_f64s(is, s.t_breaks);
  io::read_f64s(is, s.nu_breaks);
  const auto mt = io::read_u64(is), mn = io::read_u64(is);
  if (mt != 15u * (s.m_t - 1) + 1 || mn != 23u * (s.m_nu - 1) + 1) throw IoError("corrupt JPAT grid counts");
  s.t_nodes.resize(mt);
  s.nu_nodes.resize(mn);
  io::read_f64s(is, s.t_nodes);
  io::read_f64s(is, s.nu_nodes);
  Eigen::MatrixXd psi(mt, mn), amp(mt, mn);
  for (Eigen::Index i = 0; i < psi.rows(); ++i)
    for (Eigen::Index j = 0; j < psi.cols(); ++j) psi(i, j) = io::read_f64(is);
  for (Eigen::Index i = 0; i < amp.rows(); ++i)
    for (Eigen::Index j = 0; j < amp.cols(); ++j) amp(i, j) = io::read_f64(is);
  std::vector<double> wr(mn);
  io::read_f64s(is, wr);
  return PhaseAmplitudeTable(p, std::move(s), std::move(psi), std::move(amp), std::move(wr));
}

void save_table(const PhaseAmplitudeTable& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  save_table(table, f);
}

PhaseAmplitudeTable load_table(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return load_table(f);
}

PhaseAmplitudeTable cached_table(const JacobiParams& p, std::int64_t n_max) {
  const char* dir = std::getenv("JACFAST_TABLE_CACHE");
  if (dir == nullptr || *dir == '\0') return build_table(p, n_max);
  namespace fs = std::filesystem;
  std::ostringstream name;
  name << "jpat_" << std::hex << std::bit_cast<std::uint64_t>(p.a) << "_" << std::bit_cast<std::uint64_t>(p.b)
       << "_" << std::dec << n_max << ".bin";
  const fs::path path = fs::path(dir) / name.str();
  if (fs::exists(path)) {
    try {
      auto t = load_table(path.string());
      if (t.params() == p && t.n_max() == n_max) return t;
    } catch (const IoError&) {
      // unreadable cache entries are rebuilt below
    }
  }
  auto t = build_table(p, n_max);
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = path.string() + ".tmp" + std::to_string(std::hash<std::string>{}(name.str()) ^ reinterpret_cast<std::uintptr_t>(&t));
  try {
    save_table(t, tmp.string());
    fs::rename(tmp, path, ec);
  } catch (const IoError&) {
    fs::remove(tmp, ec);
  }
  return t;
}

}  // namespace jacfast
