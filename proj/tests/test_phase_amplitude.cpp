#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/special_functions/legendre.hpp>
#include <gtest/gtest.h>

#include "jacfast/chebyshev.hpp"
#include "jacfast/error.hpp"
#include "jacfast/phase_amplitude.hpp"

using namespace jacfast;
using std::numbers::pi;

namespace {

constexpr std::int64_t kNmax = 2048;

const PhaseAmplitudeTable& table_for(double a, double b) {
  static std::map<std::pair<double, double>, PhaseAmplitudeTable> cache;
  auto it = cache.find({a, b});
  if (it == cache.end()) it = cache.emplace(std::pair{a, b}, build_table(JacobiParams(a, b), kNmax)).first;
  return it->second;
}

// d psi / dt at the t-nodes of one nu column, by Chebyshev differentiation
// on each panel (independent of the W / M^2 formula used inside the table).
std::vector<double> spectral_dpsi(const PhaseAmplitudeTable& tab, Eigen::Index col) {
  const auto& s = tab.spec();
  const int k = ChebyshevGridSpec::kTPanel;
  const Eigen::MatrixXd d = cheb::differentiation_matrix(k);
  std::vector<double> out(s.t_nodes.size());
  for (int p = 0; p < s.t_panels(); ++p) {
    const double h = 0.5 * (s.t_breaks[p + 1] - s.t_breaks[p]);
    const Eigen::VectorXd v = tab.psi().col(col).segment(p * (k - 1), k);
    const Eigen::VectorXd dv = d * v / h;
    for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(p * (k - 1) + i)] = dv(i);
  }
  return out;
}

}  // namespace

TEST(GridSpec, CountsForNmax1024) {
  const auto s = build_grid_spec(1024);
  EXPECT_EQ(s.m_nu, 7);
  EXPECT_EQ(s.m_t, 24);
  EXPECT_EQ(s.t_nodes.size(), 346u);
  EXPECT_EQ(s.nu_nodes.size(), 139u);
}

TEST(GridSpec, Invariants) {
  for (std::int64_t nmax : {28, 100, 4096, 1 << 17}) {
    const auto s = build_grid_spec(nmax);
    EXPECT_EQ(s.t_nodes.size(), static_cast<std::size_t>(15 * (s.m_t - 1) + 1));
    EXPECT_EQ(s.nu_nodes.size(), static_cast<std::size_t>(23 * (s.m_nu - 1) + 1));
    EXPECT_EQ(s.m_t % 2, 0);
    EXPECT_LE(s.t_breaks.front(), 1.0 / nmax);
    EXPECT_GE(s.t_breaks.back(), pi - 1.0 / nmax);
    for (std::size_t i = 1; i < s.t_breaks.size(); ++i) EXPECT_LT(s.t_breaks[i - 1], s.t_breaks[i]);
    for (std::size_t i = 1; i < s.nu_breaks.size(); ++i) EXPECT_LT(s.nu_breaks[i - 1], s.nu_breaks[i]);
    for (std::size_t i = 0; i < s.t_breaks.size(); ++i)
      EXPECT_NEAR(s.t_breaks[i], pi - s.t_breaks[s.t_breaks.size() - 1 - i], 1e-15);
    EXPECT_EQ(s.nu_breaks.front(), 27.0);
    EXPECT_EQ(s.nu_breaks.back(), static_cast<double>(nmax));
    EXPECT_THROW(build_grid_spec(27), DomainError);
  }
}

TEST(AmplitudeOde, Coefficient) {
  EXPECT_DOUBLE_EQ(amplitude_ode_coefficient(JacobiParams(-0.5, -0.5), 40.0, 0.3), 1600.0);
  EXPECT_DOUBLE_EQ(amplitude_ode_coefficient(JacobiParams(0.5, 0.5), 10.0, pi / 2), 121.0);
  EXPECT_NEAR(amplitude_ode_coefficient(JacobiParams(0.0, 0.0), 27.0, pi / 2), 756.5, 1e-12);
}

TEST(AmplitudeOde, ChebyshevClosedForm) {
  const auto spec = build_grid_spec(512);
  const JacobiParams p(-0.5, -0.5);
  for (double nu : {27.0, 100.5, 512.0}) {
    const auto sol = solve_amplitude(p, nu, spec);
    EXPECT_NEAR(sol.wronskian, 2 / pi * nu, 1e-10 * nu);
    for (double v : sol.n) EXPECT_NEAR(v, 2 / pi, 1e-10);
    const auto psi = compute_phase(p, spec, sol);
    const double c = psi[0] - nu * spec.t_nodes[0];
    for (std::size_t i = 0; i < psi.size(); ++i) EXPECT_NEAR(psi[i] - nu * spec.t_nodes[i], c, 1e-9);
  }
}

TEST(AmplitudeOde, ResidualAndPositivity) {
  const auto spec = build_grid_spec(kNmax);
  for (auto [a, b] : {std::pair{0.0, 0.0}, {0.4, 0.4}, {-0.9, 0.7}, {0.95, -0.95}}) {
    for (double nu : {27.0, 311.0, 2048.0}) {
      const auto sol = solve_amplitude(JacobiParams(a, b), nu, spec);
      EXPECT_LE(amplitude_ode_residual(JacobiParams(a, b), spec, sol), 1e-8) << a << " " << b << " " << nu;
      for (double v : sol.n) EXPECT_GT(v, 0.0);
      EXPECT_GT(sol.wronskian, 0.0);
    }
  }
}

TEST(AmplitudeOde, LegendreAnchorMatchesSecondKindOracle) {
  // N = P~^2 + Q~^2 with Q~ = (2/pi) sqrt(n + 1/2) Q_n(cos t) sqrt(sin t)
  const auto& tab = table_for(0.0, 0.0);
  const int n = 100;
  const double t = pi / 2 + 0.3;
  const double x = std::cos(t);
  const double pt = std::sqrt(n + 0.5) * boost::math::legendre_p(n, x) * std::sqrt(std::sin(t));
  const double qt = 2 / pi * std::sqrt(n + 0.5) * boost::math::legendre_q(n, x) * std::sqrt(std::sin(t));
  const double m = tab.eval(t, n).amp;
  EXPECT_NEAR(m * m, pt * pt + qt * qt, 1e-8 * (pt * pt + qt * qt));
}

TEST(PhaseTable, ReconstructionOnRandomIntegerPairs) {
  std::mt19937_64 rng(11);
  for (auto [a, b] : {std::pair{0.0, 0.0}, {-0.8, -0.8}, {0.7, -0.3}, {-0.95, 0.95}}) {
    const auto& tab = table_for(a, b);
    const ModifiedJacobiEvaluator ev(JacobiParams(a, b), static_cast<int>(kNmax));
    std::uniform_real_distribution<double> tt(tab.spec().t_min(), tab.spec().t_max());
    std::uniform_int_distribution<int> nn(27, static_cast<int>(kNmax));
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const double t = tt(rng);
      const int nu = nn(rng);
      const auto pa = tab.eval(t, nu);
      worst = std::max(worst, std::abs(pa.amp * std::cos(pa.psi) - ev.eval(nu, t)) / pa.amp);
    }
    EXPECT_LE(worst, 1e-7) << a << " " << b;
  }
}

TEST(PhaseTable, InvariantsAtNodes) {
  for (auto [a, b] : {std::pair{0.25, 0.25}, {-0.6, 0.1}}) {
    const auto& tab = table_for(a, b);
    for (Eigen::Index j = 0; j < tab.psi().cols(); j += 7) {
      const double w = tab.wronskian()[static_cast<std::size_t>(j)];
      const auto dpsi = spectral_dpsi(tab, j);
      std::vector<double> prod(dpsi.size());
      double mean = 0.0, worst = 0.0;
      for (std::size_t i = 0; i < dpsi.size(); ++i) {
        const double m = tab.amp()(static_cast<Eigen::Index>(i), j);
        prod[i] = m * m * dpsi[i];
        EXPECT_GT(m, 0.0);
        worst = std::max(worst, std::abs(prod[i] - w) / w);
        mean += prod[i];
      }
      mean /= static_cast<double>(prod.size());
      double var = 0.0;
      for (double v : prod) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(prod.size()));
      EXPECT_LE(worst, 1e-9) << "column " << j;
      EXPECT_LE(sd, 1e-8 * mean) << "column " << j;
      for (Eigen::Index i = 1; i < tab.psi().rows(); ++i) EXPECT_LT(tab.psi()(i - 1, j), tab.psi()(i, j));
    }
  }
}

TEST(PhaseTable, ExactAtNodesAndFiniteNearThem) {
  const auto& tab = table_for(0.1, 0.3);
  const auto& s = tab.spec();
  const auto pa = tab.eval(s.t_nodes[5], s.nu_nodes[3]);
  EXPECT_EQ(pa.psi, tab.psi()(5, 3));
  EXPECT_EQ(pa.amp, tab.amp()(5, 3));
  const auto near = tab.eval(s.t_nodes[5] + 1e-15, s.nu_nodes[3] + 1e-13);
  EXPECT_TRUE(std::isfinite(near.psi) && std::isfinite(near.amp));
  EXPECT_THROW(tab.eval(s.t_min() / 2, 100.0), DomainError);
  EXPECT_THROW(tab.eval(1.0, 26.0), DomainError);
}

TEST(PhaseTable, ChebyshevTableHasConstantAmplitude) {
  const auto& tab = table_for(-0.5, -0.5);
  EXPECT_LE((tab.amp().array() - std::sqrt(2 / pi)).abs().maxCoeff(), 1e-10);
}

TEST(PhaseTable, SerializationIsBitExact) {
  const auto& tab = table_for(0.3, -0.2);
  std::stringstream ss;
  save_table(tab, ss);
  const auto back = load_table(ss);
  EXPECT_EQ(back.params(), tab.params());
  EXPECT_EQ(back.psi(), tab.psi());
  EXPECT_EQ(back.amp(), tab.amp());
  EXPECT_EQ(back.wronskian(), tab.wronskian());
  EXPECT_EQ(back.spec().t_nodes, tab.spec().t_nodes);
  std::stringstream again;
  save_table(back, again);
  EXPECT_EQ(ss.str(), again.str());

  std::stringstream bad("JPAX0000");
  EXPECT_THROW(load_table(bad), IoError);
}

TEST(PhaseTable, CacheDirectoryFromEnvironment) {
  const auto dir = std::filesystem::temp_directory_path() / "jacfast_cache_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  ::setenv("JACFAST_TABLE_CACHE", dir.c_str(), 1);
  const auto t1 = cached_table(JacobiParams(0.15, 0.15), 256);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
  const auto t2 = cached_table(JacobiParams(0.15, 0.15), 256);
  EXPECT_EQ(t1.psi(), t2.psi());
  ::unsetenv("JACFAST_TABLE_CACHE");
  std::filesystem::remove_all(dir);
}

TEST(TableQuadrature, AgreesWithNewton) {
  for (auto [a, b] : {std::pair{0.0, 0.0}, {-0.7, 0.4}}) {
    const int n = 1000;
    const auto tab = build_table(JacobiParams(a, b), 2 * n);
    const auto r = gauss_jacobi_trig_table(tab, n);
    const auto g = gauss_jacobi_trig(JacobiParams(a, b), n);
    for (int k = 0; k < n; ++k) {
      EXPECT_NEAR(r.nodes[k], g.nodes[k], 1e-11);
      EXPECT_NEAR(r.weights[k], g.weights[k], 1e-9 * g.weights[k]);
    }
  }
}
