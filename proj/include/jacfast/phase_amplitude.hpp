#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jacfast/special_fn.hpp"

namespace jacfast {

// Tensor grid of piecewise Chebyshev points: 16 per t-panel, 24 per nu-panel,
// with panel endpoints shared between neighbours.
struct ChebyshevGridSpec {
  static constexpr int kTPanel = 16;
  static constexpr int kNuPanel = 24;
  static constexpr double kNuMin = 27.0;

  std::int64_t n_max = 0;
  int m_t = 0;
  int m_nu = 0;
  std::vector<double> t_breaks;   // m_t values, symmetric about pi/2
  std::vector<double> nu_breaks;  // m_nu values from 27 to n_max
  std::vector<double> t_nodes;    // 15(m_t-1)+1
  std::vector<double> nu_nodes;   // 23(m_nu-1)+1

  int t_panels() const { return m_t - 1; }
  int nu_panels() const { return m_nu - 1; }
  double t_min() const { return t_breaks.front(); }
  double t_max() const { return t_breaks.back(); }
  // index of the panel containing t (or nu); clamps to the last panel at the right end
  int t_panel_of(double t) const;
  int nu_panel_of(double nu) const;
};

ChebyshevGridSpec build_grid_spec(std::int64_t n_max);

// q_nu(t) in P~'' + q P~ = 0.
double amplitude_ode_coefficient(const JacobiParams& p, double nu, double t);
double amplitude_ode_coefficient_deriv(const JacobiParams& p, double nu, double t);

// Non-oscillatory solution of N''' + 4qN' + 2q'N = 0 at the t-nodes, with
// N = M^2 so that P~ = M cos(psi), psi' = W/N.
struct AmplitudeSolution {
  double nu = 0.0;
  double wronskian = 0.0;
  double anchor_phase = 0.0;  // phase at t = pi/2, reduced to (-pi,pi]
  std::vector<double> n;      // N
  std::vector<double> dn;     // N'
  std::vector<double> d2n;    // N''
  std::vector<double> d3n;    // N'''
};

AmplitudeSolution solve_amplitude(const JacobiParams& p, double nu, const ChebyshevGridSpec& spec);

// Residual of the amplitude equation in a scaled max norm: on each panel,
// max |N''' + 4qN' + 2q'N| over the nodes and the midpoints between them,
// divided by the max of |N'''| + 4|qN'| + 2|q'N| over the same points.
// Off-node values come from interpolating N, N', N'''.
double amplitude_ode_residual(const JacobiParams& p, const ChebyshevGridSpec& spec, const AmplitudeSolution& sol);

// psi at the t-nodes. The integration constant is fixed at t = pi/2 from
// P~ and P~' there; the 2 pi branch is the one nearest the large-degree
// asymptote (nu + (a+b+1)/2) pi/2 - (2a+1) pi/4.
std::vector<double> compute_phase(const JacobiParams& p, const ChebyshevGridSpec& spec, const AmplitudeSolution& sol);

struct PhaseAmp {
  double psi;
  double amp;
};

class PhaseAmplitudeTable {
 public:
  PhaseAmplitudeTable(JacobiParams p, ChebyshevGridSpec spec, Eigen::MatrixXd psi, Eigen::MatrixXd amp,
                      std::vector<double> wronskian);

  const JacobiParams& params() const { return params_; }
  const ChebyshevGridSpec& spec() const { return spec_; }
  std::int64_t n_max() const { return spec_.n_max; }
  // rows indexed by t-node, columns by nu-node
  const Eigen::MatrixXd& psi() const { return psi_; }
  const Eigen::MatrixXd& amp() const { return amp_; }
  const std::vector<double>& wronskian() const { return wronskian_; }

  bool contains(double t, double nu) const;
  PhaseAmp eval(double t, double nu) const;
  double wronskian_at(double nu) const;

 private:
  JacobiParams params_;
  ChebyshevGridSpec spec_;
  Eigen::MatrixXd psi_;
  Eigen::MatrixXd amp_;
  std::vector<double> wronskian_;
};

PhaseAmplitudeTable build_table(const JacobiParams& p, std::int64_t n_max);

PhaseAmp eval_phase_amplitude(const PhaseAmplitudeTable& table, double t, double nu);

// psi and M as piecewise polynomials in t at one fixed nu.
class NuSlice {
 public:
  NuSlice(const PhaseAmplitudeTable& table, double nu);
  double nu() const { return nu_; }
  double wronskian() const { return w_; }
  PhaseAmp eval(double t) const;
  // psi' = W / M^2
  double dpsi(double t) const;
  const std::vector<double>& psi_nodes() const { return psi_; }
  const std::vector<double>& amp_nodes() const { return amp_; }

 private:
  const ChebyshevGridSpec* spec_;
  double nu_, w_;
  std::vector<double> psi_, amp_;
};

// psi and M as piecewise polynomials in nu at one fixed t.
class TSlice {
 public:
  TSlice(const PhaseAmplitudeTable& table, double t);
  double t() const { return t_; }
  PhaseAmp eval(double nu) const;

 private:
  const ChebyshevGridSpec* spec_;
  double t_;
  std::vector<double> psi_, amp_;
};

// Nodes and weights of the n-point trigonometric rule from the table: roots
// solve psi(t,n) = pi/2 + m pi by safeguarded Newton, weights are
// pi / psi'(t) = pi M^2 / W. Needs n - 1 >= 27 and every root inside the
// table's t-range.
QuadratureRule gauss_jacobi_trig_table(const PhaseAmplitudeTable& table, int n);

// Binary table file: magic "JPAT", u32 version, a, b, n_max, grid arrays,
// psi/amp row-major, wronskian. Little-endian f64/u64 throughout.
void save_table(const PhaseAmplitudeTable& table, std::ostream& os);
PhaseAmplitudeTable load_table(std::istream& is);
void save_table(const PhaseAmplitudeTable& table, const std::string& path);
PhaseAmplitudeTable load_table(const std::string& path);

// Loads a cached table from $JACFAST_TABLE_CACHE when present and valid,
// otherwise builds one (and stores it there if the variable is set).
PhaseAmplitudeTable cached_table(const JacobiParams& p, std::int64_t n_max);

}  // namespace jacfast
