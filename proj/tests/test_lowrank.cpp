#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "jacfast/error.hpp"
#include "jacfast/lowrank.hpp"
#include "jacfast/phase_amplitude.hpp"
#include "jacfast/transform1d.hpp"

using namespace jacfast;

namespace {

Eigen::MatrixXcd random_unitary(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) a(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
}

// Q1 diag(s) Q2^*, rows x cols
Eigen::MatrixXcd with_spectrum(Index rows, Index cols, const std::vector<double>& s, std::uint64_t seed) {
  const Eigen::MatrixXcd q1 = random_unitary(rows, seed).leftCols(static_cast<Index>(s.size()));
  const Eigen::MatrixXcd q2 = random_unitary(cols, seed + 1).leftCols(static_cast<Index>(s.size()));
  Eigen::VectorXd d(static_cast<Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) d(static_cast<Index>(i)) = s[i];
  return q1 * d.asDiagonal() * q2.adjoint();
}

double max_rel_error(const Eigen::MatrixXcd& z, const Eigen::MatrixXcd& approx) {
  return (z - approx).cwiseAbs().maxCoeff() / z.cwiseAbs().maxCoeff();
}

// relative Frobenius error over a fixed set of entries, first r columns
double sampled_frobenius(const EntrySample& s, const LowRankFactorization& f, Index r) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cplx acc = 0.0;
    for (Index l = 0; l < r; ++l) acc += f.left(s.rows[i], l) * f.right(s.cols[i], l);
    num += std::norm(s.values[i] - acc);
    den += std::norm(s.values[i]);
  }
  return std::sqrt(num / den);
}

struct BMatrix {
  PhaseAmplitudeTable table;
  std::vector<double> points;
  std::int64_t n;
  BMatrix(double a, std::int64_t n_)
      : table(build_table(JacobiParams(a, a), 2 * n_)), points(quadrature_for(JacobiParams(a, a), n_).nodes), n(n_) {}
  ResidualOracle oracle() const { return ResidualOracle(table, points, n); }
};

class PolyGenerator final : public RowSmoothGenerator {
 public:
  PolyGenerator(std::vector<double> x, Index cols, int degree) : x_(std::move(x)), cols_(cols), degree_(degree) {}
  Index rows() const override { return static_cast<Index>(x_.size()); }
  Index cols() const override { return cols_; }
  cplx entry(Index j, Index k) const override { return g(x_[j], k); }
  double coordinate(Index j) const override { return x_[j]; }
  Eigen::MatrixXcd sample_at(std::span<const double> x) const override {
    Eigen::MatrixXcd m(static_cast<Index>(x.size()), cols_);
    for (Index l = 0; l < m.rows(); ++l)
      for (Index k = 0; k < cols_; ++k) m(l, k) = g(x[l], k);
    return m;
  }

 private:
  cplx g(double x, Index k) const {
    if (degree_ == 0) return cplx(1.0 + 0.1 * static_cast<double>(k), -0.5);
    return std::pow(x, static_cast<double>(k % (degree_ + 1))) * cplx(1.0, static_cast<double>(k));
  }
  std::vector<double> x_;
  Index cols_;
  int degree_;
};

}  // namespace

TEST(Rsvd, RankOneIsExact) {
  Eigen::VectorXcd u = Eigen::VectorXcd::Random(120), v = Eigen::VectorXcd::Random(90);
  const Eigen::MatrixXcd z = u * v.adjoint();
  const auto f = rsvd(MatrixOracle(z), 1, RsvdOptions{});
  EXPECT_EQ(f.rank(), 1);
  EXPECT_LE(max_rel_error(z, f.dense()), 1e-13);
}

TEST(Rsvd, ExactRankRecovery) {
  const std::vector<double> s{3.0, 2.0, 1.0, 0.5, 0.1};
  const Eigen::MatrixXcd z = with_spectrum(300, 200, s, 5);
  const MatrixOracle o(z);
  for (int r : {5, 8}) {
    const auto f = rsvd(o, r, RsvdOptions{.seed = 9});
    const auto sample = draw_entry_sample(o, 10000, 77);
    EXPECT_LE(sampled_error(sample, f), 1e-12) << r;
    for (std::size_t i = 5; i < f.singular_values.size(); ++i) EXPECT_LE(f.singular_values[i], 1e-12 * s[0]);
  }
}

TEST(Rsvd, SingularValuesMatchDenseSvd) {
  std::vector<double> s;
  for (int i = 0; i < 16; ++i) s.push_back(std::pow(10.0, -i));
  const Eigen::MatrixXcd z = with_spectrum(256, 192, s, 21);
  const Eigen::BDCSVD<Eigen::MatrixXcd> dense(z);
  const auto f = rsvd(MatrixOracle(z), 8, RsvdOptions{.seed = 4});
  ASSERT_EQ(f.singular_values.size(), 8u);
  for (int i = 0; i < 8; ++i) {
    const double ref = dense.singularValues()(i);
    EXPECT_NEAR(f.singular_values[i], ref, 1e-6 * ref) << i;
  }
}

TEST(Rsvd, SingularValuesMatchDenseSvdOnResidualMatrix) {
  const BMatrix bm(0.3, 512);
  const auto o = bm.oracle();
  std::vector<Index> all(static_cast<std::size_t>(o.rows()));
  for (Index j = 0; j < o.rows(); ++j) all[static_cast<std::size_t>(j)] = j;
  const Eigen::BDCSVD<Eigen::MatrixXcd> dense(o.fill_rows(all));
  const auto f = rsvd(o, 24, RsvdOptions{.seed = 1});
  for (int i = 0; i < 10; ++i) {
    const double ref = dense.singularValues()(i);
    EXPECT_NEAR(f.singular_values[i], ref, 1e-6 * ref) << i;
  }
}

TEST(Rsvd, DeterministicUnderSeed) {
  const BMatrix bm(-0.2, 1024);
  const auto o = bm.oracle();
  const auto f1 = rsvd(o, 20, RsvdOptions{.seed = 123});
  const auto f2 = rsvd(o, 20, RsvdOptions{.seed = 123});
  EXPECT_EQ(f1.left, f2.left);
  EXPECT_EQ(f1.right, f2.right);
  EXPECT_EQ(f1.singular_values, f2.singular_values);
  const auto f3 = rsvd(o, 20, RsvdOptions{.seed = 124});
  EXPECT_NE(f1.left, f3.left);
  const auto a1 = rsvd_adaptive(o, 1e-8, 8, RsvdOptions{.seed = 5});
  const auto a2 = rsvd_adaptive(o, 1e-8, 8, RsvdOptions{.seed = 5});
  EXPECT_EQ(a1.left, a2.left);
  EXPECT_EQ(a1.right, a2.right);
}

TEST(Rsvd, RejectsBadArguments) {
  const MatrixOracle o(Eigen::MatrixXcd::Ones(4, 4));
  EXPECT_THROW(rsvd(o, 0, RsvdOptions{}), DomainError);
  EXPECT_THROW(rsvd(o, 2, RsvdOptions{.oversampling = 0}), DomainError);
  EXPECT_THROW(rsvd(o, 2, RsvdOptions{.iterations = 0}), DomainError);
}

TEST(RsvdAdaptive, StopsAtExactRank) {
  const Eigen::MatrixXcd z = with_spectrum(400, 300, {1.0, 0.3, 0.01}, 8);
  const auto f = rsvd_adaptive(MatrixOracle(z), 1e-10, 2, RsvdOptions{.seed = 3});
  EXPECT_EQ(f.rank(), 3);
  EXPECT_FALSE(f.saturated);
}

TEST(RsvdAdaptive, GrowthCapAborts) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd z(64, 64);
  for (Index j = 0; j < 64; ++j)
    for (Index i = 0; i < 64; ++i) z(i, j) = g(rng);
  EXPECT_THROW(rsvd_adaptive(MatrixOracle(z), 1e-10, 2, RsvdOptions{}), NumericalError);
}

TEST(RsvdAdaptive, RankAndErrorStableAcrossSeeds) {
  const double eps = 1e-8;
  for (double a : {0.0, 0.4, -0.8}) {
    const BMatrix bm(a, 2048);
    const auto o = bm.oracle();
    const auto check = draw_entry_sample(o, 10000, 999);
    std::vector<Index> ranks;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto f = rsvd_adaptive(o, eps, 8, RsvdOptions{.seed = seed});
      ranks.push_back(f.rank());
      EXPECT_LE(sampled_error(check, f), 2 * eps) << a << " seed " << seed;
    }
    const auto [lo, hi] = std::ranges::minmax(ranks);
    EXPECT_LE(hi - lo, 2) << a;
  }
}

TEST(RsvdAdaptive, TruncationIsMonotone) {
  const BMatrix bm(0.1, 1024);
  const auto o = bm.oracle();
  const auto f = rsvd(o, 30, RsvdOptions{.seed = 17});
  const auto sample = draw_entry_sample(o, 10000, 4);
  for (Index r = 1; r < f.rank(); ++r)
    EXPECT_LE(sampled_frobenius(sample, f, r + 1), sampled_frobenius(sample, f, r) + 1e-12) << r;

  Index prev = 0;
  for (double eps : {1e-4, 1e-6, 1e-8, 1e-10}) {
    const auto g = rsvd_adaptive(o, eps, 8, RsvdOptions{.seed = 17});
    EXPECT_GE(g.rank(), prev);
    prev = g.rank();
  }
}

TEST(ChebLowrank, ConstantGeneratorIsRankOne) {
  std::vector<double> x;
  for (int i = 0; i < 50; ++i) x.push_back(0.02 * i);
  const PolyGenerator g(x, 30, 0);
  const std::vector<double> breaks{0.0, 0.5, 1.0};
  const auto f = cheb_lowrank(g, breaks, 8, 1e-12);
  EXPECT_EQ(f.rank(), 1);
  EXPECT_LE(max_rel_error(g.sample_at(x), f.dense()), 1e-13);
}

TEST(ChebLowrank, PolynomialGeneratorIsReproduced) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(200);
  for (auto& v : x) v = u(rng);
  const PolyGenerator g(x, 40, 3);
  const Eigen::MatrixXcd z = g.sample_at(x);
  const std::vector<double> global{-1.0, 1.0};
  const auto plain = cheb_lowrank(g, global, 6);
  EXPECT_EQ(plain.rank(), 6);
  EXPECT_LE(max_rel_error(z, plain.dense()), 1e-13);
  const auto comp = cheb_lowrank(g, global, 6, 1e-12);
  EXPECT_EQ(comp.rank(), 4);
  EXPECT_LE(max_rel_error(z, comp.dense()), 1e-12);
  const std::vector<double> panels{-1.0, -0.3, 0.2, 1.0};
  const auto pw = cheb_lowrank(g, panels, 5, 1e-12);
  EXPECT_EQ(pw.rank(), 4);
  EXPECT_LE(max_rel_error(z, pw.dense()), 1e-12);
  EXPECT_THROW(cheb_lowrank(g, std::vector<double>{-0.5, 1.0}, 6), DomainError);
  EXPECT_THROW(cheb_lowrank(g, global, 1), DomainError);
}

TEST(Factors, RecompressPreservesProduct) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  Eigen::MatrixXcd l(60, 9), r(45, 9);
  for (Index j = 0; j < 9; ++j) {
    for (Index i = 0; i < 60; ++i) l(i, j) = cplx(n(rng), n(rng));
    for (Index i = 0; i < 45; ++i) r(i, j) = cplx(n(rng), n(rng));
  }
  const auto f = recompress(l, r, 0.0);
  EXPECT_LE(max_rel_error(l * r.transpose(), f.dense()), 1e-13);
  for (std::size_t i = 1; i < f.singular_values.size(); ++i) EXPECT_GE(f.singular_values[i - 1], f.singular_values[i]);

  Eigen::MatrixXcd l2 = l.leftCols(4) * Eigen::MatrixXcd::Random(4, 9);
  const auto g = recompress(l2, r, 1e-12);
  EXPECT_EQ(g.rank(), 4);
  EXPECT_LE(max_rel_error(l2 * r.transpose(), g.dense()), 1e-12);
}

TEST(Factors, HadamardIsEntrywiseProduct) {
  const LowRankFactorization f{Eigen::MatrixXcd::Random(30, 3), Eigen::MatrixXcd::Random(20, 3), {}, 0.0, false};
  const LowRankFactorization g{Eigen::MatrixXcd::Random(30, 2), Eigen::MatrixXcd::Random(20, 2), {}, 0.0, false};
  const auto h = hadamard(f, g);
  EXPECT_EQ(h.rank(), 6);
  EXPECT_LE(max_rel_error(f.dense().cwiseProduct(g.dense()), h.dense()), 1e-14);
}

TEST(Factors, TruncateSampledPicksSmallestPassingRank) {
  const Eigen::MatrixXcd z = with_spectrum(100, 80, {1.0, 1e-3, 1e-6, 1e-9}, 30);
  const MatrixOracle o(z);
  const auto f = rsvd(o, 4, RsvdOptions{.seed = 2});
  const auto s = draw_entry_sample(o, 4000, 1);
  const auto t = truncate_sampled(f, s, 1e-4);
  EXPECT_EQ(t.rank(), 2);
  EXPECT_FALSE(t.saturated);
  const auto none = truncate_sampled(f.truncated(1), s, 1e-8);
  EXPECT_TRUE(none.saturated);
}

TEST(Pivots, DominantColumnFirst) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Random(10, 6) * 1e-3;
  a.col(4) *= 1e4;
  a.col(1) *= 1e2;
  const auto p = pivoted_qr_pivots(a, 2);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0], 4);
  EXPECT_EQ(p[1], 1);
}

TEST(Oracle, DefaultFillMatchesEntries) {
  const BMatrix bm(0.6, 256);
  const auto o = bm.oracle();
  const std::vector<Index> rows{0, 17, 255}, cols{0, 100, o.cols() - 1};
  const auto fr = o.fill_rows(rows), fc = o.fill_cols(cols), fb = o.fill_block(rows, cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const cplx e = o.entry(rows[i], cols[k]);
      // batched fills go through slices of the table, so agree to rounding only
      EXPECT_LE(std::abs(fr(static_cast<Index>(i), cols[k]) - e), 1e-13);
      EXPECT_LE(std::abs(fc(rows[i], static_cast<Index>(k)) - e), 1e-13);
      EXPECT_LE(std::abs(fb(static_cast<Index>(i), static_cast<Index>(k)) - e), 1e-13);
      EXPECT_EQ(o.entry(rows[i], cols[k]), e);
    }
}
