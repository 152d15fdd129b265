#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "jacfast/error.hpp"
#include "jacfast/reference.hpp"
#include "jacfast/transform1d.hpp"

using namespace jacfast;
using std::numbers::pi;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

std::string bytes_of(const TransformPlan& p) {
  std::ostringstream os;
  save_plan(p, os);
  return os.str();
}

}  // namespace

TEST(Bins, NearestBinRoundsHalfToEven) {
  const std::int64_t n = 8;
  EXPECT_EQ(nearest_bin(2 * pi * 0.5 / n, n), 0);
  EXPECT_EQ(nearest_bin(2 * pi * 1.5 / n, n), 2);
  EXPECT_EQ(nearest_bin(2 * pi * 2.5 / n, n), 2);
  EXPECT_EQ(nearest_bin(2 * pi * 7.6 / n, n), 0);
  EXPECT_EQ(nearest_bin(2 * pi * 3.2 / n, n), 3);
}

TEST(Bins, ResidualWithinHalfBin) {
  const JacobiParams p(0.2, -0.4);
  for (std::int64_t n : {64, 1000}) {
    const auto q = quadrature_for(p, n);
    for (double t : q.nodes) {
      const auto m = nearest_bin(t, n);
      double d = t - 2 * pi * static_cast<double>(m) / static_cast<double>(n);
      d = std::remainder(d, 2 * pi);
      EXPECT_LE(static_cast<double>(n) * std::abs(d), pi + 1e-12);
    }
  }
}

TEST(ResidualOracle, ModulusIsAmplitudeAndPhaseMatches) {
  const JacobiParams p(0.35, 0.1);
  const std::int64_t n = 300;
  const auto table = build_table(p, 2 * n);
  const auto q = quadrature_for(p, n);
  const ResidualOracle b(table, q.nodes, n);
  const ModifiedJacobiEvaluator ev(p, static_cast<int>(n));
  const auto& bins = b.bins();
  for (Index j = 0; j < b.rows(); j += 13) {
    for (Index k = 0; k < b.cols(); k += 17) {
      const double nu = static_cast<double>(k + kLowDegrees);
      const cplx z = b.entry(j, k);
      EXPECT_NEAR(std::abs(z), table.eval(q.nodes[j], nu).amp, 1e-13);
      // Re(B e^{2 pi i m nu / n}) = M cos psi = P~
      const cplx back = z * std::polar(1.0, 2 * pi * static_cast<double>(bins[j]) * nu / static_cast<double>(n));
      EXPECT_NEAR(back.real(), ev.eval(static_cast<int>(nu), q.nodes[j]), 1e-7);
    }
  }
  EXPECT_THROW(ResidualOracle(table, q.nodes, 2 * n + 5), DomainError);
}

TEST(Forward, FirstUnitVectorGivesDegreeZero) {
  const JacobiParams p(0.4, 0.4);
  const std::int64_t n = 512;
  const auto plan = build_plan_1d(p, n, PlanOptions{});
  std::vector<double> e(n, 0.0);
  e[0] = 1.0;
  const auto g = forward_1d(plan, e);
  for (std::int64_t j = 0; j < n; ++j) {
    const double ref = std::sqrt(plan.weights()[j]) * eval_modified_p(p, 0, plan.points()[j]);
    EXPECT_NEAR(g[j], ref, 1e-12);
  }
}

TEST(Forward, MatchesDenseMatrix) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ab(-0.9, 0.9);
  std::vector<std::pair<double, double>> params{{0.25, 0.25}};
  for (int i = 0; i < 4; ++i) params.emplace_back(ab(rng), ab(rng));
  for (auto [a, b] : params) {
    const JacobiParams p(a, b);
    for (std::int64_t n : {256, 512}) {
      const auto plan = build_plan_1d(p, n, PlanOptions{.seed = 8});
      const Eigen::MatrixXd m = reference::transform_matrix(p, plan.points(), plan.weights());
      const auto alpha = random_vector(static_cast<std::size_t>(n), 5);
      const auto g = forward_1d(plan, alpha);
      const Eigen::VectorXd ref = m * Eigen::Map<const Eigen::VectorXd>(alpha.data(), n);
      EXPECT_LE(reference::relative_l2(g, std::vector<double>(ref.data(), ref.data() + n)), 1e-7) << a << " " << b;
      const auto h = inverse_1d(plan, alpha);
      const Eigen::VectorXd refi = m.transpose() * Eigen::Map<const Eigen::VectorXd>(alpha.data(), n);
      EXPECT_LE(reference::relative_l2(h, std::vector<double>(refi.data(), refi.data() + n)), 1e-7) << a << " " << b;
    }
  }
}

TEST(Forward, DenseMatrixIsOrthogonal) {
  for (std::int64_t n : {64, 300, 1024}) {
    const JacobiParams p(-0.3, 0.6);
    const auto q = quadrature_for(p, n);
    const Eigen::MatrixXd m = reference::transform_matrix(p, q.nodes, q.weights);
    EXPECT_LE((m.transpose() * m - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8) << n;
  }
}

TEST(Forward, UnitVectorsRoundTrip) {
  const JacobiParams p(-0.6, -0.6);
  const std::int64_t n = 700;
  const auto plan = build_plan_1d(p, n, PlanOptions{.seed = 1});
  for (std::int64_t k : {0, 1, 26, 27, 28, 350, 699}) {
    std::vector<double> e(n, 0.0);
    e[k] = 1.0;
    const auto back = inverse_1d(plan, forward_1d(plan, e));
    EXPECT_LE(reference::relative_l2(back, e), 1e-8) << k;
  }
}

TEST(Forward, LowBlockHoldsLowDegrees) {
  const JacobiParams p(0.1, 0.7);
  const auto plan = build_plan_1d(p, 128, PlanOptions{});
  ASSERT_EQ(plan.low_degrees(), kLowDegrees);
  for (Index j = 0; j < 128; j += 9)
    for (int k = 0; k < kLowDegrees; ++k)
      EXPECT_NEAR(plan.low_block()(j, k), eval_modified_p(p, k, plan.points()[j]), 1e-13);
}

TEST(Forward, SmallSizesUseDensePath) {
  const JacobiParams p(0.5, -0.5);
  for (std::int64_t n : {1, 2, 13, 28}) {
    const auto plan = build_plan_1d(p, n, PlanOptions{});
    EXPECT_EQ(plan.method(), LowRankMethod::dense);
    EXPECT_EQ(plan.rank(), 0);
    const auto alpha = random_vector(static_cast<std::size_t>(n), 2);
    const auto g = forward_1d(plan, alpha);
    const auto ref = reference::forward(p, plan.points(), plan.weights(), alpha);
    EXPECT_LE(reference::relative_l2(g, ref), 1e-13);
    EXPECT_LE(reference::relative_l2(inverse_1d(plan, g), alpha), 1e-12);
  }
}

TEST(Forward, RejectsWrongLengths) {
  const auto plan = build_plan_1d(JacobiParams(0.0, 0.0), 64, PlanOptions{});
  std::vector<double> x(63);
  EXPECT_THROW(forward_1d(plan, x), ShapeError);
  EXPECT_THROW(inverse_1d(plan, x), ShapeError);
  EXPECT_THROW(build_plan_1d(JacobiParams(0.0, 0.0), 0, PlanOptions{}), DomainError);
  EXPECT_THROW(build_plan_1d(JacobiParams(0.0, 0.0), 64, PlanOptions{.eps = 0.0}), DomainError);
}

TEST(Forward, SerialAndParallelAgree) {
  const auto plan = build_plan_1d(JacobiParams(0.3, 0.3), 2048, PlanOptions{.seed = 2});
  const auto alpha = random_vector(2048, 9);
  const auto par = forward_1d(plan, alpha);
  const auto ser = reference::forward_serial(plan, alpha);
  EXPECT_LE(reference::relative_l2(par, ser), 1e-14);
  EXPECT_LE(reference::relative_l2(inverse_1d(plan, par), reference::inverse_serial(plan, par)), 1e-14);
}

TEST(Forward, ChebPlanIsAccurate) {
  for (double a : {0.0, -0.8}) {
    const JacobiParams p(a, a);
    const std::int64_t n = 1024;
    const auto plan = build_plan_1d(p, n, PlanOptions{.method = LowRankMethod::cheb, .seed = 3});
    EXPECT_EQ(plan.method(), LowRankMethod::cheb);
    const auto alpha = random_vector(static_cast<std::size_t>(n), 4);
    const auto ref = reference::forward(p, plan.points(), plan.weights(), alpha);
    EXPECT_LE(reference::relative_l2(forward_1d(plan, alpha), ref), 1e-7) << a;
    EXPECT_LE(plan.rank(), 24);
  }
}

TEST(Nonuniform, SamePointsGiveSameFactors) {
  const JacobiParams p(0.2, 0.2);
  const std::int64_t n = 400;
  const auto uni = build_plan_1d(p, n, PlanOptions{.seed = 6});
  const auto non = build_plan_1d(p, uni.points(), PlanOptions{.mode = TransformMode::nonuniform, .seed = 6});
  EXPECT_EQ(non.factors().left, uni.factors().left);
  EXPECT_EQ(non.factors().right, uni.factors().right);
  EXPECT_EQ(non.low_block(), uni.low_block());
  EXPECT_TRUE(non.weights().empty());
  const auto alpha = random_vector(static_cast<std::size_t>(n), 3);
  const auto g = forward_1d(non, alpha);
  const auto ref = reference::forward(p, non.points(), {}, alpha);
  EXPECT_LE(reference::relative_l2(g, ref), 1e-7);
  EXPECT_THROW(inverse_1d(non, g), DomainError);
}

TEST(Nonuniform, RandomPoints) {
  const JacobiParams p(-0.45, 0.8);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.001, pi - 0.001);
  std::vector<double> pts(900);
  for (auto& t : pts) t = u(rng);
  const auto plan = build_plan_1d(p, pts, PlanOptions{.mode = TransformMode::nonuniform, .seed = 2});
  const auto alpha = random_vector(pts.size(), 8);
  EXPECT_LE(reference::relative_l2(forward_1d(plan, alpha), reference::forward(p, pts, {}, alpha)), 1e-7);
  std::vector<double> bad{0.5, pi};
  EXPECT_THROW(build_plan_1d(p, bad, PlanOptions{.mode = TransformMode::nonuniform}), DomainError);
}

TEST(PlanIo, RoundTripIsBitExact) {
  const auto plan = build_plan_1d(JacobiParams(0.4, -0.1), 777, PlanOptions{.seed = 42});
  const auto blob = bytes_of(plan);
  std::istringstream is(blob);
  const auto back = load_plan(is);
  EXPECT_EQ(bytes_of(back), blob);
  EXPECT_EQ(back.points(), plan.points());
  EXPECT_EQ(back.seed(), 42u);
  const auto alpha = random_vector(777, 1);
  EXPECT_EQ(forward_1d(back, alpha), forward_1d(plan, alpha));

  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "jacfast_plan_test.jtpl").string();
  save_plan(plan, path);
  EXPECT_EQ(bytes_of(load_plan(path)), blob);
  std::filesystem::remove(path);
}

TEST(PlanIo, SameSeedSameBytes) {
  const JacobiParams p(-0.7, 0.3);
  const auto a = build_plan_1d(p, 1500, PlanOptions{.seed = 77});
  const auto b = build_plan_1d(p, 1500, PlanOptions{.seed = 77});
  EXPECT_EQ(bytes_of(a), bytes_of(b));
}

TEST(PlanIo, RejectsCorruptFiles) {
  const auto blob = bytes_of(build_plan_1d(JacobiParams(0.0, 0.0), 100, PlanOptions{}));
  std::string bad = blob;
  bad[0] = 'X';
  std::istringstream a(bad);
  EXPECT_THROW(load_plan(a), IoError);
  std::istringstream b(blob.substr(0, blob.size() / 2));
  EXPECT_THROW(load_plan(b), IoError);
  EXPECT_THROW(load_plan(std::string("/nonexistent/plan.jtpl")), IoError);
}

TEST(Quadrature, TableRuleMatchesNewtonPastThreshold) {
  const JacobiParams p(0.15, -0.55);
  const std::int64_t n = 5000;
  const auto q = quadrature_for(p, n);
  const auto g = gauss_jacobi_trig(p, static_cast<int>(n));
  for (std::int64_t k = 0; k < n; k += 7) {
    EXPECT_NEAR(q.nodes[k], g.nodes[k], 1e-11);
    EXPECT_NEAR(q.weights[k], g.weights[k], 1e-9 * g.weights[k]);
  }
}
