#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jacfast/lowrank.hpp"
#include "jacfast/phase_amplitude.hpp"
#include "jacfast/special_fn.hpp"

namespace jacfast {

// Degrees below this go through the dense block V, the rest through B.
inline constexpr int kLowDegrees = 27;

enum class TransformMode : std::uint32_t { uniform = 0, nonuniform = 1 };
enum class LowRankMethod : std::uint32_t { rs = 0, cheb = 1, dense = 2 };

const char* to_string(TransformMode m);
const char* to_string(LowRankMethod m);

// Nearest bin m = round-half-even(t n / (2 pi)) mod n.
std::int64_t nearest_bin(double t, std::int64_t n);

// B(j,k) = M(t_j,nu) exp(i (psi(t_j,nu) - 2 pi m_j nu / n)) for degrees
// nu = 27..n-1 (column k holds degree k + 27).
class ResidualOracle final : public EntryOracle {
 public:
  ResidualOracle(const PhaseAmplitudeTable& table, std::span<const double> points, std::int64_t n);

  Index rows() const override { return static_cast<Index>(points_.size()); }
  Index cols() const override { return n_ - kLowDegrees; }
  cplx entry(Index j, Index k) const override;
  Eigen::MatrixXcd fill_rows(std::span<const Index> rows) const override;
  Eigen::MatrixXcd fill_cols(std::span<const Index> cols) const override;

  const std::vector<std::int64_t>& bins() const { return bins_; }
  const std::vector<double>& points() const { return points_; }
  std::int64_t n() const { return n_; }

 private:
  cplx combine(Index j, double nu, const PhaseAmp& pa) const;

  const PhaseAmplitudeTable* table_;
  std::vector<double> points_;
  std::vector<std::int64_t> bins_;
  std::int64_t n_;
};

// A(j,k) = M(t_j,nu) exp(i (psi(t_j,nu) - nu t_j)), same columns as B. Smooth
// in t, so it can be interpolated on the table's t-panels; B is A times the
// bin twist exp(i nu (t_j - 2 pi m_j / n)).
class PhaseOracle final : public RowSmoothGenerator {
 public:
  PhaseOracle(const PhaseAmplitudeTable& table, std::span<const double> points, std::int64_t n);

  Index rows() const override { return static_cast<Index>(points_.size()); }
  Index cols() const override { return n_ - kLowDegrees; }
  cplx entry(Index j, Index k) const override;
  double coordinate(Index j) const override { return points_[j]; }
  Eigen::MatrixXcd sample_at(std::span<const double> x) const override;

 private:
  const PhaseAmplitudeTable* table_;
  std::vector<double> points_;
  std::int64_t n_;
};

// CHEB baseline for B: piecewise t-interpolation of A on the table panels,
// times a Chebyshev-in-nu expansion of the bin twist, recompressed and cut
// at the smallest rank meeting eps on a sampled set of B entries.
LowRankFactorization cheb_factorization(const PhaseAmplitudeTable& table, const ResidualOracle& b, double eps,
                                        std::uint64_t seed);

struct PlanOptions {
  TransformMode mode = TransformMode::uniform;
  LowRankMethod method = LowRankMethod::rs;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  int oversampling = 3;
  int initial_rank = 0;  // 0: ceil(2 log2 n)
};

namespace detail {
struct FftKernel;
}

class TransformPlan {
 public:
  const JacobiParams& params() const { return params_; }
  std::int64_t n() const { return n_; }
  TransformMode mode() const { return mode_; }
  LowRankMethod method() const { return method_; }
  std::uint64_t seed() const { return seed_; }
  double eps() const { return eps_; }
  std::int64_t table_n_max() const { return table_n_max_; }
  Index rank() const { return factors_.rank(); }
  Index low_degrees() const { return v_.cols(); }

  const std::vector<double>& points() const { return points_; }
  // quadrature weights; empty in nonuniform mode
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::int64_t>& bins() const { return bins_; }
  const Eigen::MatrixXd& low_block() const { return v_; }
  const LowRankFactorization& factors() const { return factors_; }

  friend TransformPlan make_plan(JacobiParams p, TransformMode mode, LowRankMethod method, std::uint64_t seed,
                                 double eps, std::int64_t table_n_max, std::vector<double> points,
                                 std::vector<double> weights, Eigen::MatrixXd v, LowRankFactorization factors);
  friend void apply_forward(const TransformPlan&, std::span<const double>, std::span<double>, bool);
  friend void apply_inverse(const TransformPlan&, std::span<const double>, std::span<double>, bool);

 private:
  TransformPlan(JacobiParams p) : params_(p) {}

  JacobiParams params_;
  std::int64_t n_ = 0;
  TransformMode mode_ = TransformMode::uniform;
  LowRankMethod method_ = LowRankMethod::rs;
  std::uint64_t seed_ = 0;
  double eps_ = 0.0;
  std::int64_t table_n_max_ = 0;
  std::vector<double> points_, weights_, sqrt_w_;
  std::vector<std::int64_t> bins_;
  Eigen::MatrixXd v_;
  LowRankFactorization factors_;
  std::shared_ptr<const detail::FftKernel> fft_;
};

// Builds a plan from already computed pieces; checks shapes and fills bins.
TransformPlan make_plan(JacobiParams p, TransformMode mode, LowRankMethod method, std::uint64_t seed, double eps,
                        std::int64_t table_n_max, std::vector<double> points, std::vector<double> weights,
                        Eigen::MatrixXd v, LowRankFactorization factors);

// Table size covering degrees < n and every point, starting from 2n.
std::int64_t table_size_for(const JacobiParams& p, std::int64_t n, std::span<const double> points);

// n-point trigonometric Gauss-Jacobi rule; Newton for small n, the phase
// table above that.
QuadratureRule quadrature_for(const JacobiParams& p, std::int64_t n);

// Uniform mode: points and weights from the n-point rule.
TransformPlan build_plan_1d(const JacobiParams& p, std::int64_t n, const PlanOptions& opt);
// Nonuniform mode with caller points (one per output value).
TransformPlan build_plan_1d(const JacobiParams& p, std::span<const double> points, const PlanOptions& opt);
// Either mode against a given table; points must lie in its t-range.
TransformPlan build_plan_1d(const PhaseAmplitudeTable& table, std::int64_t n, std::span<const double> points,
                            std::span<const double> weights, const PlanOptions& opt);

// Forward: values sqrt(w_j) sum_k alpha_k P~_k(t_j) (no sqrt(w) in nonuniform mode).
std::vector<double> forward_1d(const TransformPlan& plan, std::span<const double> alpha);
// Inverse of the uniform forward: alpha = J^T W g for weighted values g.
std::vector<double> inverse_1d(const TransformPlan& plan, std::span<const double> g);

// Output-buffer forms; `parallel` spreads the r FFTs over OpenMP threads.
void apply_forward(const TransformPlan& plan, std::span<const double> alpha, std::span<double> out, bool parallel);
void apply_inverse(const TransformPlan& plan, std::span<const double> g, std::span<double> out, bool parallel);

// Plan file: magic "JTPL", u32 version, u32 dims, u32 body count, then the
// bodies (1D plans). Body: a, b, u64 n, u32 mode, u64 seed, u32
// method, f64 eps, u64 table n_max, u64 low-degree count, u64 rank, points,
// u64 bins, V row-major, left and right factors row-major as interleaved
// (re,im) f64, weights (uniform mode only). Little-endian throughout.
void save_plan(const TransformPlan& plan, std::ostream& os);
TransformPlan load_plan(std::istream& is);
void save_plan(const TransformPlan& plan, const std::string& path);
TransformPlan load_plan(const std::string& path);

namespace detail {
void write_plan_header(std::ostream& os, std::uint32_t dims, std::uint32_t bodies);
std::pair<std::uint32_t, std::uint32_t> read_plan_header(std::istream& is);
void write_plan_body(const TransformPlan& plan, std::ostream& os);
TransformPlan read_plan_body(std::istream& is);
}  // namespace detail

}  // namespace jacfast
