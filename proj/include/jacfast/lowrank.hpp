#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace jacfast {

using cplx = std::complex<double>;
using Index = Eigen::Index;

// A matrix known only through its entries. Implementations must be
// deterministic and safe to query from several threads at once.
class EntryOracle {
 public:
  virtual ~EntryOracle() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual cplx entry(Index j, Index k) const = 0;

  // Z(rows,:), Z(:,cols) and Z(rows,cols). The defaults call entry().
  virtual Eigen::MatrixXcd fill_rows(std::span<const Index> rows) const;
  virtual Eigen::MatrixXcd fill_cols(std::span<const Index> cols) const;
  virtual Eigen::MatrixXcd fill_block(std::span<const Index> rows, std::span<const Index> cols) const;
};

class MatrixOracle final : public EntryOracle {
 public:
  explicit MatrixOracle(Eigen::MatrixXcd z) : z_(std::move(z)) {}
  Index rows() const override { return z_.rows(); }
  Index cols() const override { return z_.cols(); }
  cplx entry(Index j, Index k) const override { return z_(j, k); }

 private:
  Eigen::MatrixXcd z_;
};

// Z ~ left * right^T. For the randomized SVD the singular values are split as
// S^{1/2} onto both factors and the columns are in decreasing singular order.
struct LowRankFactorization {
  Eigen::MatrixXcd left;   // rows x r
  Eigen::MatrixXcd right;  // cols x r
  std::vector<double> singular_values;  // empty for interpolation factors
  double target_eps = 0.0;
  // set when the trailing singular value is above target_eps relative to the
  // leading one, i.e. r was probably too small
  bool saturated = false;

  Index rank() const { return left.cols(); }
  LowRankFactorization truncated(Index r) const;
  Eigen::MatrixXcd dense() const { return left * right.transpose(); }
};

struct RsvdOptions {
  int oversampling = 3;  // q: rq rows/columns per random draw
  int iterations = 2;    // passes over the row/column selection steps
  std::uint64_t seed = 0;
};

// Randomized-sampling approximate SVD of rank r.
LowRankFactorization rsvd(const EntryOracle& z, int r, const RsvdOptions& opt);

// Random entry positions with their exact values, for error estimates.
struct EntrySample {
  std::vector<Index> rows, cols;
  std::vector<cplx> values;
  std::size_t size() const { return rows.size(); }
};
EntrySample draw_entry_sample(const EntryOracle& z, std::size_t count, std::uint64_t seed);

// max |z - z~| / max |z| over the sample, using the first r factor columns
// (all of them when r < 0).
double sampled_error(const EntrySample& s, const LowRankFactorization& f, Index r = -1);

// Estimated error for every leading rank 1..f.rank(); entry i is rank i+1.
std::vector<double> sampled_error_profile(const EntrySample& s, const LowRankFactorization& f);

inline constexpr std::size_t kErrorSampleSize = 2048;

// Doubles r from r0 until the sampled error is below target_eps, then
// truncates to the smallest passing rank. Throws NumericalError once r
// exceeds min(rows, cols)/4.
LowRankFactorization rsvd_adaptive(const EntryOracle& z, double target_eps, int r0, const RsvdOptions& opt);

// Z(j,k) = g(x_j, k) with g smooth in the row coordinate x.
class RowSmoothGenerator : public EntryOracle {
 public:
  virtual double coordinate(Index j) const = 0;
  // g(x[l], k) for every column, as an x.size() x cols() matrix
  virtual Eigen::MatrixXcd sample_at(std::span<const double> x) const = 0;
};

// Piecewise Lagrange interpolation in the row coordinate: k closed Chebyshev
// points on each panel [breaks[i], breaks[i+1]] holding at least one row. left = basis values at the rows, right = g at the nodes
// (transposed). A single panel {lo, hi} gives the global scheme. With
// recompress_eps > 0 the product is recompressed by QR and SVD, keeping
// singular values above recompress_eps times the largest.
LowRankFactorization cheb_lowrank(const RowSmoothGenerator& g, std::span<const double> breaks, int k,
                                  double recompress_eps = 0.0);

// Orthogonal recompression of left * right^T; singular values below
// rel_eps * s_max are dropped (rel_eps = 0 keeps all).
LowRankFactorization recompress(const Eigen::MatrixXcd& left, const Eigen::MatrixXcd& right, double rel_eps);

// Factors of the entrywise product (f o g): row-wise Kronecker products.
LowRankFactorization hadamard(const LowRankFactorization& f, const LowRankFactorization& g);

// Smallest leading rank whose sampled error is <= eps, or the full rank
// (flagged saturated) when none is.
LowRankFactorization truncate_sampled(const LowRankFactorization& f, const EntrySample& s, double eps);

// Column pivots chosen by the first r steps of column-pivoted Householder QR.
std::vector<Index> pivoted_qr_pivots(Eigen::MatrixXcd a, Index r);

}  // namespace jacfast
