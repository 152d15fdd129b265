#include "jacfast/transform1d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <new>
#include <numbers>
#include <numeric>
#include <sstream>

#include <fftw3.h>
#include <omp.h>

#include "jacfast/binary_io.hpp"
#include "jacfast/chebyshev.hpp"
#include "jacfast/error.hpp"

namespace jacfast {

using std::numbers::pi;

const char* to_string(TransformMode m) { return m == TransformMode::uniform ? "uniform" : "nonuniform"; }

const char* to_string(LowRankMethod m) {
  switch (m) {
    case LowRankMethod::rs:
      return "rs";
    case LowRankMethod::cheb:
      return "cheb";
    case LowRankMethod::dense:
      return "dense";
  }
  return "?";
}

std::int64_t nearest_bin(double t, std::int64_t n) {
  const double x = std::nearbyint(t * static_cast<double>(n) / (2 * pi));  // default rounding: half to even
  auto m = static_cast<std::int64_t>(x) % n;
  return m < 0 ? m + n : m;
}

namespace detail {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// fftw_malloc'd scratch, so plans can use the aligned (SIMD) codelets
struct FftBuffer {
  explicit FftBuffer(int len) : p(reinterpret_cast<cplx*>(fftw_alloc_complex(static_cast<std::size_t>(len)))), n(len) {
    if (p == nullptr) throw std::bad_alloc();
  }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;
  ~FftBuffer() { fftw_free(p); }
  cplx& operator[](Index i) { return p[i]; }
  cplx* data() { return p; }
  cplx* begin() { return p; }
  cplx* end() { return p + n; }
  cplx* p;
  int n;
};

// In-place length-n DFT with the e^{+2 pi i jk/n} sign. run() expects an FftBuffer.
struct FftKernel {
  fftw_plan plan = nullptr;
  int n = 0;

  explicit FftKernel(int len) : n(len) {
    FftBuffer tmp(n);
    auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
    const std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (plan == nullptr) throw NumericalError("FFTW could not create a plan");
  }
  FftKernel(const FftKernel&) = delete;
  FftKernel& operator=(const FftKernel&) = delete;
  ~FftKernel() {
    const std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  void run(FftBuffer& buf) const {
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(plan, p, p);
  }
};

}  // namespace detail

namespace {
double degree(Index k) { return static_cast<double>(k + kLowDegrees); }

void check_points(const PhaseAmplitudeTable& table, std::span<const double> points, std::int64_t n) {
  if (n <= kLowDegrees + 1) throw DomainError("residual matrix needs n > 28");
  if (n > table.n_max() + 1) throw DomainError("table does not cover degree n-1");
  for (double t : points) {
    if (!(t >= table.spec().t_min() && t <= table.spec().t_max())) {
      std::ostringstream os;
      os.precision(17);
      os << "point t=" << t << " outside the table range [" << table.spec().t_min() << ", " << table.spec().t_max()
         << "]";
      throw DomainError(os.str());
    }
  }
}
}  // namespace

ResidualOracle::ResidualOracle(const PhaseAmplitudeTable& table, std::span<const double> points, std::int64_t n)
    : table_(&table), points_(points.begin(), points.end()), n_(n) {
  check_points(table, points_, n);
  bins_.reserve(points_.size());
  for (double t : points_) bins_.push_back(nearest_bin(t, n));
}

cplx ResidualOracle::combine(Index j, double nu, const PhaseAmp& pa) const {
  const double theta = 2 * pi * static_cast<double>(bins_[j]) / static_cast<double>(n_);
  return std::polar(pa.amp, pa.psi - nu * theta);
}


cplx ResidualOracle::entry(Index j, Index k) const {
  const double nu = degree(k);
  return combine(j, nu, table_->eval(points_[j], nu));
}

Eigen::MatrixXcd ResidualOracle::fill_rows(std::span<const Index> rows) const {
  const Index nc = cols();
  Eigen::MatrixXcd out(static_cast<Index>(rows.size()), nc);
#pragma omp parallel for schedule(dynamic, 1)
  for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
    const TSlice s(*table_, points_[rows[i]]);
    for (Index k = 0; k < nc; ++k) {
      const double nu = degree(k);
      out(i, k) = combine(rows[i], nu, s.eval(nu));
    }
  }
  return out;
}

Eigen::MatrixXcd ResidualOracle::fill_cols(std::span<const Index> cols) const {
  const Index nr = rows();
  Eigen::MatrixXcd out(nr, static_cast<Index>(cols.size()));
#pragma omp parallel for schedule(dynamic, 1)
  for (Index l = 0; l < static_cast<Index>(cols.size()); ++l) {
    const double nu = degree(cols[l]);
    const NuSlice s(*table_, nu);
    for (Index j = 0; j < nr; ++j) out(j, l) = combine(j, nu, s.eval(points_[j]));
  }
  return out;
}

PhaseOracle::PhaseOracle(const PhaseAmplitudeTable& table, std::span<const double> points, std::int64_t n)
    : table_(&table), points_(points.begin(), points.end()), n_(n) {
  check_points(table, points_, n);
}

cplx PhaseOracle::entry(Index j, Index k) const {
  const double nu = degree(k);
  const PhaseAmp pa = table_->eval(points_[j], nu);
  return std::polar(pa.amp, pa.psi - nu * points_[j]);
}

Eigen::MatrixXcd PhaseOracle::sample_at(std::span<const double> x) const {
  for (double t : x) {
    if (!(t >= table_->spec().t_min() && t <= table_->spec().t_max())) throw DomainError("sample_at: t off the table");
  }
  Eigen::MatrixXcd out(static_cast<Index>(x.size()), cols());
#pragma omp parallel for schedule(dynamic, 16)
  for (Index k = 0; k < cols(); ++k) {
    const double nu = degree(k);
    const NuSlice s(*table_, nu);
    for (Index l = 0; l < out.rows(); ++l) {
      const PhaseAmp pa = s.eval(x[l]);
      out(l, k) = std::polar(pa.amp, pa.psi - nu * x[l]);
    }
  }
  return out;
}

namespace {
// |nu delta| <= pi on the whole matrix; 16 Chebyshev points in nu resolve
// exp(i nu delta) far below 1e-12
constexpr int kTwistNodes = 16;
// recompression threshold relative to the final target
constexpr double kInnerEps = 1e-3;
}  // namespace

LowRankFactorization cheb_factorization(const PhaseAmplitudeTable& table, const ResidualOracle& b, double eps,
                                        std::uint64_t seed) {
  const PhaseOracle a(table, b.points(), b.n());
  const LowRankFactorization fa =
      cheb_lowrank(a, table.spec().t_breaks, ChebyshevGridSpec::kTPanel, kInnerEps * eps);

  const double lo = kLowDegrees, hi = static_cast<double>(b.n() - 1);
  const auto y = cheb::points(kTwistNodes, lo, hi);
  const auto w = cheb::bary_weights(kTwistNodes);
  LowRankFactorization twist;
  twist.left.resize(b.rows(), kTwistNodes);
  twist.right.resize(b.cols(), kTwistNodes);
  const double step = 2 * pi / static_cast<double>(b.n());
  for (Index j = 0; j < b.rows(); ++j) {
    const double delta = b.points()[j] - step * static_cast<double>(b.bins()[j]);
    for (int l = 0; l < kTwistNodes; ++l) twist.left(j, l) = std::polar(1.0, y[l] * delta);
  }
  std::vector<double> basis(kTwistNodes);
  for (Index k = 0; k < b.cols(); ++k) {
    cheb::lagrange_basis(y, w, degree(k), basis);
    for (int l = 0; l < kTwistNodes; ++l) twist.right(k, l) = basis[l];
  }
  const LowRankFactorization h = hadamard(fa, twist);
  const LowRankFactorization f = recompress(h.left, h.right, kInnerEps * eps);
  return truncate_sampled(f, draw_entry_sample(b, kErrorSampleSize, seed ^ 0x5bd1e995ULL), eps);
}

TransformPlan make_plan(JacobiParams p, TransformMode mode, LowRankMethod method, std::uint64_t seed, double eps,
                        std::int64_t table_n_max, std::vector<double> points, std::vector<double> weights,
                        Eigen::MatrixXd v, LowRankFactorization factors) {
  TransformPlan plan(p);
  const auto n = static_cast<std::int64_t>(points.size());
  if (n < 1) throw ShapeError("plan needs at least one point");
  if (v.rows() != n || v.cols() > n) throw ShapeError("plan: low-degree block has the wrong shape");
  if (mode == TransformMode::uniform && static_cast<std::int64_t>(weights.size()) != n) {
    throw ShapeError("uniform plan needs one weight per point");
  }
  if (mode == TransformMode::nonuniform && !weights.empty()) throw ShapeError("nonuniform plan carries no weights");
  if (factors.rank() > 0 && (factors.left.rows() != n || factors.right.rows() != n - v.cols() ||
                             factors.right.cols() != factors.rank())) {
    throw ShapeError("plan: factor shapes do not match n");
  }
  if (factors.rank() == 0 && v.cols() != n) throw ShapeError("plan without factors needs a full low-degree block");
  for (double t : points) {
    if (!(t > 0.0 && t < pi)) throw DomainError("plan points must lie in (0, pi)");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw DomainError("plan weights must be positive");
  }
  plan.n_ = n;
  plan.mode_ = mode;
  plan.method_ = method;
  plan.seed_ = seed;
  plan.eps_ = eps;
  plan.table_n_max_ = table_n_max;
  plan.bins_.resize(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) plan.bins_[j] = nearest_bin(points[j], n);
  plan.sqrt_w_.resize(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) plan.sqrt_w_[j] = std::sqrt(weights[j]);
  plan.points_ = std::move(points);
  plan.weights_ = std::move(weights);
  plan.v_ = std::move(v);
  plan.factors_ = std::move(factors);
  if (plan.factors_.rank() > 0) plan.fft_ = std::make_shared<const detail::FftKernel>(static_cast<int>(n));
  return plan;
}

std::int64_t table_size_for(const JacobiParams&, std::int64_t n, std::span<const double> points) {
  if (points.empty()) return 2 * n;
  const auto [lo, hi] = std::ranges::minmax(points);
  std::int64_t nmax = std::max<std::int64_t>(2 * n, 64);
  for (int i = 0; i < 40; ++i, nmax *= 2) {
    const auto s = build_grid_spec(nmax);
    if (s.t_min() <= lo && s.t_max() >= hi) return nmax;
  }
  throw DomainError("points too close to 0 or pi for any phase table");
}

namespace {

constexpr std::int64_t kNewtonLimit = 4096;

std::pair<QuadratureRule, std::int64_t> quadrature_with_table(const JacobiParams& p, std::int64_t n) {
  std::int64_t nmax = 2 * n;
  for (int i = 0; i < 6; ++i, nmax *= 2) {
    try {
      return {gauss_jacobi_trig_table(cached_table(p, nmax), static_cast<int>(n)), nmax};
    } catch (const NumericalError&) {
      // roots outside the t-range; a larger table reaches closer to the ends
    }
  }
  throw NumericalError("table quadrature failed for every table size tried");
}

Eigen::MatrixXd low_block(const JacobiParams& p, std::span<const double> points, Index cols) {
  Eigen::MatrixXd v(static_cast<Index>(points.size()), cols);
  const ModifiedJacobiEvaluator ev(p, static_cast<int>(std::max<Index>(cols - 1, 0)));
#pragma omp parallel
  {
    std::vector<double> row(static_cast<std::size_t>(cols));
#pragma omp for schedule(static)
    for (Index j = 0; j < v.rows(); ++j) {
      ev.eval_all(points[j], row);
      for (Index k = 0; k < cols; ++k) v(j, k) = row[k];
    }
  }
  return v;
}

int default_rank(std::int64_t n) { return static_cast<int>(std::ceil(2 * std::log2(static_cast<double>(n)))); }

LowRankFactorization dense_factorization(const EntryOracle& z, double eps, std::uint64_t seed) {
  std::vector<Index> rows(static_cast<std::size_t>(z.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  const Eigen::MatrixXcd b = z.fill_rows(rows);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::VectorXd sh = s.cwiseSqrt();
  LowRankFactorization f;
  f.left = svd.matrixU() * sh.asDiagonal();
  f.right = svd.matrixV().conjugate() * sh.asDiagonal();
  f.singular_values.assign(s.data(), s.data() + s.size());
  return truncate_sampled(f, draw_entry_sample(z, kErrorSampleSize, seed ^ 0x5bd1e995ULL), eps);
}

}  // namespace

QuadratureRule quadrature_for(const JacobiParams& p, std::int64_t n) {
  if (n < 1) throw DomainError("quadrature needs n >= 1");
  if (n <= kNewtonLimit) return gauss_jacobi_trig(p, static_cast<int>(n));
  return quadrature_with_table(p, n).first;
}

TransformPlan build_plan_1d(const PhaseAmplitudeTable& table, std::int64_t n, std::span<const double> points,
                            std::span<const double> weights, const PlanOptions& opt) {
  const JacobiParams& p = table.params();
  if (static_cast<std::int64_t>(points.size()) != n) throw ShapeError("build_plan_1d: need one point per degree");
  if (!(opt.eps > 0.0)) throw DomainError("build_plan_1d: eps must be positive");
  const Index low = n <= kLowDegrees + 1 ? n : kLowDegrees;
  Eigen::MatrixXd v = low_block(p, points, low);
  LowRankFactorization f;
  LowRankMethod method = opt.method;
  if (low < n) {
    const ResidualOracle b(table, points, n);
    const int r0 = opt.initial_rank > 0 ? opt.initial_rank : default_rank(n);
    if (method == LowRankMethod::rs && std::min(b.rows(), b.cols()) < 4 * r0) method = LowRankMethod::dense;
    switch (method) {
      case LowRankMethod::rs:
        f = rsvd_adaptive(b, opt.eps, r0, RsvdOptions{opt.oversampling, 2, opt.seed});
        break;
      case LowRankMethod::cheb:
        f = cheb_factorization(table, b, opt.eps, opt.seed);
        break;
      case LowRankMethod::dense:
        f = dense_factorization(b, opt.eps, opt.seed);
        break;
    }
  } else {
    method = LowRankMethod::dense;
    f.left = Eigen::MatrixXcd(n, 0);
    f.right = Eigen::MatrixXcd(0, 0);
  }
  std::vector<double> w(weights.begin(), weights.end());
  return make_plan(p, opt.mode, method, opt.seed, opt.eps, table.n_max(), {points.begin(), points.end()},
                   std::move(w), std::move(v), std::move(f));
}

TransformPlan build_plan_1d(const JacobiParams& p, std::int64_t n, const PlanOptions& opt) {
  if (opt.mode != TransformMode::uniform) throw DomainError("build_plan_1d(n): nonuniform mode needs points");
  if (n < 1) throw DomainError("build_plan_1d: n must be positive");
  QuadratureRule rule;
  std::int64_t nmax = 0;
  if (n > kNewtonLimit) {
    std::tie(rule, nmax) = quadrature_with_table(p, n);
  } else {
    rule = gauss_jacobi_trig(p, static_cast<int>(n));
  }
  if (n <= kLowDegrees + 1) {
    // dense path, no table needed
    Eigen::MatrixXd v = low_block(p, rule.nodes, n);
    LowRankFactorization f;
    f.left = Eigen::MatrixXcd(n, 0);
    f.right = Eigen::MatrixXcd(0, 0);
    return make_plan(p, opt.mode, LowRankMethod::dense, opt.seed, opt.eps, 0, std::move(rule.nodes),
                     std::move(rule.weights), std::move(v), std::move(f));
  }
  nmax = std::max(nmax, table_size_for(p, n, rule.nodes));
  const PhaseAmplitudeTable table = cached_table(p, nmax);
  return build_plan_1d(table, n, rule.nodes, rule.weights, opt);
}

TransformPlan build_plan_1d(const JacobiParams& p, std::span<const double> points, const PlanOptions& opt) {
  if (opt.mode != TransformMode::nonuniform) throw DomainError("build_plan_1d(points): mode must be nonuniform");
  const auto n = static_cast<std::int64_t>(points.size());
  if (n < 1) throw DomainError("build_plan_1d: need at least one point");
  for (double t : points) {
    if (!(t > 0.0 && t < pi)) throw DomainError("nonuniform points must lie in (0, pi)");
  }
  if (n <= kLowDegrees + 1) {
    Eigen::MatrixXd v = low_block(p, points, n);
    LowRankFactorization f;
    f.left = Eigen::MatrixXcd(n, 0);
    f.right = Eigen::MatrixXcd(0, 0);
    return make_plan(p, opt.mode, LowRankMethod::dense, opt.seed, opt.eps, 0, {points.begin(), points.end()}, {},
                     std::move(v), std::move(f));
  }
  const PhaseAmplitudeTable table = cached_table(p, table_size_for(p, n, points));
  return build_plan_1d(table, n, points, {}, opt);
}

void apply_forward(const TransformPlan& plan, std::span<const double> alpha, std::span<double> out, bool parallel) {
  const auto n = static_cast<Index>(plan.n_);
  if (static_cast<Index>(alpha.size()) != n || static_cast<Index>(out.size()) != n) {
    throw ShapeError("forward transform: expected vectors of length " + std::to_string(n));
  }
  const Index low = plan.v_.cols();
  Eigen::Map<Eigen::VectorXd> y(out.data(), n);
  y.noalias() = plan.v_ * Eigen::Map<const Eigen::VectorXd>(alpha.data(), low);
  const Index r = plan.factors_.rank();
  if (r > 0) {
    const auto& left = plan.factors_.left;
    const auto& right = plan.factors_.right;
    const int threads = parallel ? std::min<int>(omp_get_max_threads(), static_cast<int>(r)) : 1;
    std::vector<Eigen::VectorXd> part(static_cast<std::size_t>(threads), Eigen::VectorXd::Zero(n));
#pragma omp parallel num_threads(threads) if (threads > 1)
    {
      const int tid = omp_get_thread_num();
      detail::FftBuffer buf(static_cast<int>(n));
      Eigen::VectorXd& acc = part[static_cast<std::size_t>(tid)];
#pragma omp for schedule(static)
      for (Index i = 0; i < r; ++i) {
        std::fill(buf.begin(), buf.begin() + low, cplx{});
        for (Index k = low; k < n; ++k) buf[k] = right(k - low, i) * alpha[k];
        plan.fft_->run(buf);
        for (Index j = 0; j < n; ++j) acc(j) += (left(j, i) * buf[plan.bins_[j]]).real();
      }
    }
    for (const auto& a : part) y += a;
  }
  if (plan.mode_ == TransformMode::uniform) {
    for (Index j = 0; j < n; ++j) out[j] *= plan.sqrt_w_[j];
  }
}

void apply_inverse(const TransformPlan& plan, std::span<const double> g, std::span<double> out, bool parallel) {
  if (plan.mode_ != TransformMode::uniform) {
    throw DomainError("inverse transform is only defined for uniform plans");
  }
  const auto n = static_cast<Index>(plan.n_);
  if (static_cast<Index>(g.size()) != n || static_cast<Index>(out.size()) != n) {
    throw ShapeError("inverse transform: expected vectors of length " + std::to_string(n));
  }
  const Index low = plan.v_.cols();
  Eigen::VectorXd h(n);
  for (Index j = 0; j < n; ++j) h(j) = g[j] * plan.sqrt_w_[j];
  Eigen::Map<Eigen::VectorXd> a(out.data(), n);
  a.setZero();
  a.head(low).noalias() = plan.v_.transpose() * h;
  const Index r = plan.factors_.rank();
  if (r > 0) {
    const auto& left = plan.factors_.left;
    const auto& right = plan.factors_.right;
    const int threads = parallel ? std::min<int>(omp_get_max_threads(), static_cast<int>(r)) : 1;
    std::vector<Eigen::VectorXd> part(static_cast<std::size_t>(threads), Eigen::VectorXd::Zero(n));
#pragma omp parallel num_threads(threads) if (threads > 1)
    {
      const int tid = omp_get_thread_num();
      detail::FftBuffer buf(static_cast<int>(n));
      Eigen::VectorXd& acc = part[static_cast<std::size_t>(tid)];
#pragma omp for schedule(static)
      for (Index i = 0; i < r; ++i) {
        std::fill(buf.begin(), buf.end(), cplx{});
        for (Index j = 0; j < n; ++j) buf[plan.bins_[j]] += left(j, i) * h(j);
        plan.fft_->run(buf);
        for (Index k = low; k < n; ++k) acc(k) += (right(k - low, i) * buf[k]).real();
      }
    }
    for (const auto& p : part) a += p;
  }
}

std::vector<double> forward_1d(const TransformPlan& plan, std::span<const double> alpha) {
  std::vector<double> out(static_cast<std::size_t>(plan.n()));
  apply_forward(plan, alpha, out, true);
  return out;
}

std::vector<double> inverse_1d(const TransformPlan& plan, std::span<const double> g) {
  std::vector<double> out(static_cast<std::size_t>(plan.n()));
  apply_inverse(plan, g, out, true);
  return out;
}

namespace {

constexpr std::uint32_t kPlanVersion = 1;

void write_complex(std::ostream& os, const Eigen::MatrixXcd& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      io::write_f64(os, m(i, j).real());
      io::write_f64(os, m(i, j).imag());
    }
}

Eigen::MatrixXcd read_complex(std::istream& is, Index rows, Index cols) {
  Eigen::MatrixXcd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double re = io::read_f64(is);
      const double im = io::read_f64(is);
      m(i, j) = {re, im};
    }
  return m;
}

}  // namespace

void detail::write_plan_header(std::ostream& os, std::uint32_t dims, std::uint32_t bodies) {
  io::write_magic(os, "JTPL");
  io::write_u32(os, kPlanVersion);
  io::write_u32(os, dims);
  io::write_u32(os, bodies);
}

std::pair<std::uint32_t, std::uint32_t> detail::read_plan_header(std::istream& is) {
  io::expect_magic(is, "JTPL");
  if (io::read_u32(is) != kPlanVersion) throw IoError("unsupported JTPL version");
  const auto dims = io::read_u32(is);
  const auto bodies = io::read_u32(is);
  if (dims < 1 || dims > 3 || (bodies != 1 && bodies != dims)) throw IoError("corrupt JTPL header (dims)");
  return {dims, bodies};
}

void save_plan(const TransformPlan& plan, std::ostream& os) {
  detail::write_plan_header(os, 1, 1);
  detail::write_plan_body(plan, os);
}

TransformPlan load_plan(std::istream& is) {
  if (detail::read_plan_header(is).first != 1) throw IoError("JTPL file holds a tensor plan");
  return detail::read_plan_body(is);
}

void detail::write_plan_body(const TransformPlan& plan, std::ostream& os) {
  io::write_f64(os, plan.params().a);
  io::write_f64(os, plan.params().b);
  io::write_u64(os, static_cast<std::uint64_t>(plan.n()));
  io::write_u32(os, static_cast<std::uint32_t>(plan.mode()));
  io::write_u64(os, plan.seed());
  io::write_u32(os, static_cast<std::uint32_t>(plan.method()));
  io::write_f64(os, plan.eps());
  io::write_u64(os, static_cast<std::uint64_t>(plan.table_n_max()));
  io::write_u64(os, static_cast<std::uint64_t>(plan.low_degrees()));
  io::write_u64(os, static_cast<std::uint64_t>(plan.rank()));
  io::write_f64s(os, plan.points());
  for (auto m : plan.bins()) io::write_u64(os, static_cast<std::uint64_t>(m));
  const auto& v = plan.low_block();
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < v.cols(); ++j) io::write_f64(os, v(i, j));
  write_complex(os, plan.factors().left);
  write_complex(os, plan.factors().right);
  if (plan.mode() == TransformMode::uniform) io::write_f64s(os, plan.weights());
}

TransformPlan detail::read_plan_body(std::istream& is) {
  const double a = io::read_f64(is), b = io::read_f64(is);
  const JacobiParams p(a, b);
  const auto n = static_cast<std::int64_t>(io::read_u64(is));
  const auto mode_raw = io::read_u32(is);
  const auto seed = io::read_u64(is);
  const auto method_raw = io::read_u32(is);
  const double eps = io::read_f64(is);
  const auto nmax = static_cast<std::int64_t>(io::read_u64(is));
  const auto low = static_cast<Index>(io::read_u64(is));
  const auto rank = static_cast<Index>(io::read_u64(is));
  if (mode_raw > 1 || method_raw > 2) throw IoError("corrupt JTPL header (mode/method)");
  if (n < 1 || n > (std::int64_t{1} << 32) || low > n || rank > n) throw IoError("corrupt JTPL header (sizes)");
  std::vector<double> points(static_cast<std::size_t>(n));
  io::read_f64s(is, points);
  std::vector<std::int64_t> bins(static_cast<std::size_t>(n));
  for (auto& m : bins) m = static_cast<std::int64_t>(io::read_u64(is));
  Eigen::MatrixXd v(n, low);
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < v.cols(); ++j) v(i, j) = io::read_f64(is);
  LowRankFactorization f;
  f.left = read_complex(is, n, rank);
  f.right = read_complex(is, rank > 0 ? n - low : 0, rank);
  f.target_eps = eps;
  const auto mode = static_cast<TransformMode>(mode_raw);
  std::vector<double> weights;
  if (mode == TransformMode::uniform) {
    weights.resize(static_cast<std::size_t>(n));
    io::read_f64s(is, weights);
  }
  TransformPlan plan = make_plan(p, mode, static_cast<LowRankMethod>(method_raw), seed, eps, nmax,
                                 std::move(points), std::move(weights), std::move(v), std::move(f));
  if (plan.bins() != bins) throw IoError("JTPL bin indices do not match the stored points");
  return plan;
}

void save_plan(const TransformPlan& plan, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  save_plan(plan, f);
  f.flush();
  if (!f) throw IoError("write failed: " + path);
}

TransformPlan load_plan(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return load_plan(f);
}

}  // namespace jacfast
