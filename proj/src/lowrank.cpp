#include "jacfast/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <iterator>
#include <sstream>

#include "jacfast/chebyshev.hpp"
#include "jacfast/error.hpp"

namespace jacfast {

Eigen::MatrixXcd EntryOracle::fill_rows(std::span<const Index> rows) const {
  const Index n = cols();
  Eigen::MatrixXcd out(static_cast<Index>(rows.size()), n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(rows.size()); ++i)
    for (Index k = 0; k < n; ++k) out(i, k) = entry(rows[i], k);
  return out;
}

Eigen::MatrixXcd EntryOracle::fill_cols(std::span<const Index> cols) const {
  const Index m = rows();
  Eigen::MatrixXcd out(m, static_cast<Index>(cols.size()));
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < static_cast<Index>(cols.size()); ++i) out(j, i) = entry(j, cols[i]);
  return out;
}

Eigen::MatrixXcd EntryOracle::fill_block(std::span<const Index> rows, std::span<const Index> cols) const {
  Eigen::MatrixXcd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < out.rows(); ++i)
    for (Index l = 0; l < out.cols(); ++l) out(i, l) = entry(rows[i], cols[l]);
  return out;
}

LowRankFactorization LowRankFactorization::truncated(Index r) const {
  if (r < 0 || r > rank()) throw DomainError("truncated: rank out of range");
  LowRankFactorization f;
  f.left = left.leftCols(r);
  f.right = right.leftCols(r);
  if (!singular_values.empty()) f.singular_values.assign(singular_values.begin(), singular_values.begin() + r);
  f.target_eps = target_eps;
  f.saturated = saturated;
  return f;
}

std::vector<Index> pivoted_qr_pivots(Eigen::MatrixXcd a, Index r) {
  const Index m = a.rows(), n = a.cols();
  r = std::min({r, m, n});
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Eigen::VectorXd norms(n), ref(n);
  for (Index j = 0; j < n; ++j) norms(j) = ref(j) = a.col(j).squaredNorm();
  Eigen::VectorXcd work(n);
  for (Index k = 0; k < r; ++k) {
    Index p = 0;
    norms.tail(n - k).maxCoeff(&p);
    p += k;
    if (p != k) {
      a.col(k).swap(a.col(p));
      std::swap(norms(k), norms(p));
      std::swap(ref(k), ref(p));
      std::swap(perm[k], perm[p]);
    }
    cplx tau;
    double beta;
    auto v = a.col(k).tail(m - k);
    v.makeHouseholderInPlace(tau, beta);
    a(k, k) = beta;
    if (k + 1 < n) {
      auto rest = a.bottomRightCorner(m - k, n - k - 1);
      rest.applyHouseholderOnTheLeft(a.col(k).tail(m - k - 1), std::conj(tau), work.data());
    }
    for (Index j = k + 1; j < n; ++j) {
      double s = norms(j) - std::norm(a(k, j));
      // recompute once cancellation has eaten most of the digits
      if (s < 1e-8 * ref(j)) {
        s = a.col(j).tail(m - k - 1).squaredNorm();
        ref(j) = s;
      }
      norms(j) = std::max(s, 0.0);
    }
  }
  perm.resize(static_cast<std::size_t>(r));
  return perm;
}

namespace {

std::vector<Index> random_subset(Index total, Index count, std::mt19937_64& rng) {
  count = std::min(count, total);
  std::vector<Index> all(static_cast<std::size_t>(total)), out;
  std::iota(all.begin(), all.end(), Index{0});
  out.reserve(static_cast<std::size_t>(count));
  std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
  return out;
}

std::vector<Index> merge(std::vector<Index> a, const std::vector<Index>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::ranges::sort(a);
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

Eigen::MatrixXcd thin_q(const Eigen::MatrixXcd& a, Index r) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Identity(a.rows(), r);
  q.applyOnTheLeft(qr.householderQ());
  return q;
}

Eigen::MatrixXcd take_rows(const Eigen::MatrixXcd& a, const std::vector<Index>& idx) {
  Eigen::MatrixXcd out(static_cast<Index>(idx.size()), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = a.row(idx[i]);
  return out;
}

}  // namespace

LowRankFactorization rsvd(const EntryOracle& z, int r_in, const RsvdOptions& opt) {
  if (r_in < 1 || opt.oversampling < 1 || opt.iterations < 1) {
    throw DomainError("rsvd needs r >= 1, q >= 1 and iters >= 1");
  }
  const Index m = z.rows(), n = z.cols();
  if (m < 1 || n < 1) throw ShapeError("rsvd: empty matrix");
  const Index r = std::min<Index>({r_in, m, n});
  const Index rq = r * opt.oversampling;
  std::mt19937_64 rng(opt.seed);

  std::vector<Index> pi_row, pi_col;
  for (int it = 0; it < opt.iterations; ++it) {
    const auto rows = merge(random_subset(m, rq, rng), pi_row);
    pi_col = pivoted_qr_pivots(z.fill_rows(rows), r);
    const auto cols = merge(random_subset(n, rq, rng), pi_col);
    // pivoted LQ of Z(:,J) as pivoted QR of its adjoint
    auto picked = pivoted_qr_pivots(z.fill_cols(cols).adjoint(), r);
    pi_row = std::move(picked);
  }
  std::ranges::sort(pi_row);
  std::ranges::sort(pi_col);
  const Eigen::MatrixXcd q_col = thin_q(z.fill_cols(pi_col), static_cast<Index>(pi_col.size()));
  const Eigen::MatrixXcd q_row = thin_q(z.fill_rows(pi_row).adjoint(), static_cast<Index>(pi_row.size()));

  const auto I = merge(random_subset(m, rq, rng), pi_row);
  const auto J = merge(random_subset(n, rq, rng), pi_col);
  const Eigen::MatrixXcd zij = z.fill_block(I, J);
  const Eigen::MatrixXcd x = take_rows(q_col, I);             // (Q_col)_{I,:}
  const Eigen::MatrixXcd yh = take_rows(q_row, J);            // ((Q_row^*)_{:,J})^*
  const Eigen::MatrixXcd t = x.completeOrthogonalDecomposition().solve(zij);
  const Eigen::MatrixXcd mid = yh.completeOrthogonalDecomposition().solve(t.adjoint()).adjoint();

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(mid, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::VectorXd sh = s.cwiseSqrt();
  LowRankFactorization f;
  f.left = (q_col * svd.matrixU()) * sh.asDiagonal();
  f.right = (q_row * svd.matrixV()).conjugate() * sh.asDiagonal();
  f.singular_values.assign(s.data(), s.data() + s.size());
  if (!f.left.allFinite() || !f.right.allFinite()) throw NumericalError("rsvd produced non-finite factors");
  return f;
}

EntrySample draw_entry_sample(const EntryOracle& z, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> dj(0, z.rows() - 1), dk(0, z.cols() - 1);
  EntrySample s;
  s.rows.resize(count);
  s.cols.resize(count);
  s.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    s.rows[i] = dj(rng);
    s.cols[i] = dk(rng);
  }
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) s.values[i] = z.entry(s.rows[i], s.cols[i]);
  return s;
}

std::vector<double> sampled_error_profile(const EntrySample& s, const LowRankFactorization& f) {
  const Index r = f.rank();
  std::vector<double> err(static_cast<std::size_t>(r), 0.0);
  double scale = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    scale = std::max(scale, std::abs(s.values[i]));
    cplx acc = 0.0;
    for (Index l = 0; l < r; ++l) {
      acc += f.left(s.rows[i], l) * f.right(s.cols[i], l);
      err[l] = std::max(err[l], std::abs(s.values[i] - acc));
    }
  }
  if (scale > 0.0)
    for (auto& e : err) e /= scale;
  return err;
}

double sampled_error(const EntrySample& s, const LowRankFactorization& f, Index r) {
  if (r < 0) r = f.rank();
  if (r == 0) return 1.0;
  return f.rank() == r ? sampled_error_profile(s, f).back() : sampled_error_profile(s, f.truncated(r)).back();
}

LowRankFactorization rsvd_adaptive(const EntryOracle& z, double target_eps, int r0, const RsvdOptions& opt) {
  if (!(target_eps > 0.0)) throw DomainError("rsvd_adaptive needs target_eps > 0");
  if (r0 < 1) throw DomainError("rsvd_adaptive needs r0 >= 1");
  const Index small = std::min(z.rows(), z.cols());
  const Index cap = std::max<Index>(small / 4, 1);
  const EntrySample sample = draw_entry_sample(z, kErrorSampleSize, opt.seed ^ 0x5bd1e995ULL);
  double best = 1.0;
  int attempt = 0;
  for (Index r = std::min<Index>(r0, small);; r = std::min(2 * r, small), ++attempt) {
    if (r > cap) {
      std::ostringstream os;
      os << "rsvd_adaptive: rank " << r << " exceeds the cap " << cap << " (min dimension/4) before reaching "
         << target_eps << "; best sampled error " << best;
      throw NumericalError(os.str());
    }
    RsvdOptions o = opt;
    o.seed = opt.seed + static_cast<std::uint64_t>(attempt);
    LowRankFactorization f = rsvd(z, static_cast<int>(r), o);
    const auto prof = sampled_error_profile(sample, f);
    for (std::size_t l = 0; l < prof.size(); ++l) {
      if (prof[l] <= target_eps) {
        LowRankFactorization out = f.truncated(static_cast<Index>(l) + 1);
        out.target_eps = target_eps;
        out.saturated = false;
        return out;
      }
    }
    best = std::min(best, *std::ranges::min_element(prof));
    if (r == small) {
      // full rank still misses the target: the estimate is noise-limited
      LowRankFactorization out = std::move(f);
      out.target_eps = target_eps;
      out.saturated = true;
      return out;
    }
  }
}

LowRankFactorization truncate_sampled(const LowRankFactorization& f, const EntrySample& s, double eps) {
  const auto prof = sampled_error_profile(s, f);
  for (std::size_t l = 0; l < prof.size(); ++l) {
    if (prof[l] <= eps) {
      LowRankFactorization out = f.truncated(static_cast<Index>(l) + 1);
      out.target_eps = eps;
      out.saturated = false;
      return out;
    }
  }
  LowRankFactorization out = f;
  out.target_eps = eps;
  out.saturated = true;
  return out;
}

namespace {

// thin Q and R of a (rows x cols), Q has min(rows, cols) columns
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> thin_qr(const Eigen::MatrixXcd& a) {
  const Index k = std::min(a.rows(), a.cols());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  Eigen::MatrixXcd q = Eigen::MatrixXcd::Identity(a.rows(), k);
  q.applyOnTheLeft(qr.householderQ());
  Eigen::MatrixXcd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return {std::move(q), std::move(r)};
}

}  // namespace

LowRankFactorization recompress(const Eigen::MatrixXcd& left, const Eigen::MatrixXcd& right, double rel_eps) {
  if (left.cols() != right.cols()) throw ShapeError("recompress: factor ranks differ");
  LowRankFactorization f;
  f.target_eps = rel_eps;
  if (left.cols() == 0 || left.rows() == 0 || right.rows() == 0) {
    f.left.resize(left.rows(), 0);
    f.right.resize(right.rows(), 0);
    return f;
  }
  const auto [ql, rl] = thin_qr(left);
  const auto [qr, rr] = thin_qr(right);
  const Eigen::MatrixXcd core = rl * rr.transpose();
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  Index r = 0;
  while (r < s.size() && s(r) > rel_eps * s(0) && s(r) > 0.0) ++r;
  const Eigen::VectorXd sh = s.head(r).cwiseSqrt();
  f.left = ql * svd.matrixU().leftCols(r) * sh.asDiagonal();
  f.right = qr * svd.matrixV().leftCols(r).conjugate() * sh.asDiagonal();
  f.singular_values.assign(s.data(), s.data() + r);
  return f;
}

LowRankFactorization hadamard(const LowRankFactorization& f, const LowRankFactorization& g) {
  if (f.left.rows() != g.left.rows() || f.right.rows() != g.right.rows()) throw ShapeError("hadamard: shape mismatch");
  const Index rf = f.rank(), rg = g.rank();
  LowRankFactorization h;
  h.left.resize(f.left.rows(), rf * rg);
  h.right.resize(f.right.rows(), rf * rg);
  for (Index a = 0; a < rf; ++a)
    for (Index l = 0; l < rg; ++l) {
      h.left.col(a * rg + l) = f.left.col(a).cwiseProduct(g.left.col(l));
      h.right.col(a * rg + l) = f.right.col(a).cwiseProduct(g.right.col(l));
    }
  return h;
}

LowRankFactorization cheb_lowrank(const RowSmoothGenerator& g, std::span<const double> breaks, int k,
                                  double recompress_eps) {
  if (k < 2) throw DomainError("cheb_lowrank needs at least 2 points per panel");
  if (breaks.size() < 2 || !std::ranges::is_sorted(breaks)) throw DomainError("cheb_lowrank: bad breakpoints");
  const Index m = g.rows(), n = g.cols();
  if (m == 0 || n == 0) throw ShapeError("cheb_lowrank: empty matrix");
  const Index np = static_cast<Index>(breaks.size()) - 1;

  // rows grouped by panel; only panels holding rows get nodes
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(np));
  for (Index j = 0; j < m; ++j) {
    const double x = g.coordinate(j);
    if (!(x >= breaks.front() && x <= breaks.back())) throw DomainError("cheb_lowrank: row outside the panels");
    const auto it = std::ranges::upper_bound(breaks, x);
    const Index p = std::clamp<Index>(static_cast<Index>(it - breaks.begin()) - 1, 0, np - 1);
    members[p].push_back(j);
  }
  std::vector<Index> used;
  std::vector<double> nodes;
  for (Index p = 0; p < np; ++p) {
    if (members[p].empty()) continue;
    used.push_back(p);
    const auto pts = cheb::points(k, breaks[p], breaks[p + 1]);
    nodes.insert(nodes.end(), pts.begin(), pts.end());
  }
  const auto w = cheb::bary_weights(k);
  const Index kk = k;
  // basis block of panel used[u]: members x k
  auto basis_block = [&](std::size_t u) {
    const auto& rows = members[used[u]];
    Eigen::MatrixXd l(static_cast<Index>(rows.size()), kk);
    std::vector<double> b(static_cast<std::size_t>(k));
    const auto pn = std::span<const double>(nodes).subspan(u * static_cast<std::size_t>(k), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      cheb::lagrange_basis(pn, w, g.coordinate(rows[i]), b);
      for (Index c = 0; c < kk; ++c) l(static_cast<Index>(i), c) = b[c];
    }
    return l;
  };
  const Eigen::MatrixXcd vals = g.sample_at(nodes);  // K x n

  LowRankFactorization f;
  if (recompress_eps <= 0.0) {
    f.left = Eigen::MatrixXcd::Zero(m, static_cast<Index>(nodes.size()));
    for (std::size_t u = 0; u < used.size(); ++u) {
      const Eigen::MatrixXd l = basis_block(u);
      const auto& rows = members[used[u]];
      for (std::size_t i = 0; i < rows.size(); ++i)
        f.left.row(rows[i]).segment(static_cast<Index>(u) * kk, kk) = l.row(static_cast<Index>(i)).cast<cplx>();
    }
    f.right = vals.transpose();
    return f;
  }

  // left is block diagonal after grouping rows, so its QR is done panel by
  // panel; the stacked R blocks multiply the node values.
  std::vector<Eigen::MatrixXd> qs(used.size());
  std::vector<Index> off(used.size() + 1, 0);
  for (std::size_t u = 0; u < used.size(); ++u) off[u + 1] = off[u] + std::min<Index>(kk, members[used[u]].size());
  Eigen::MatrixXcd core(off.back(), n);
  for (std::size_t u = 0; u < used.size(); ++u) {
    const Eigen::MatrixXd l = basis_block(u);
    const Index d = off[u + 1] - off[u];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(l);
    qs[u] = Eigen::MatrixXd::Identity(l.rows(), d);
    qs[u].applyOnTheLeft(qr.householderQ());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    core.middleRows(off[u], d) = r.cast<cplx>() * vals.middleRows(static_cast<Index>(u) * kk, kk);
  }
  const auto [qc, rc] = thin_qr(core.transpose());
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(rc.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  Index r = 0;
  while (r < s.size() && s(r) > recompress_eps * s(0) && s(r) > 0.0) ++r;
  const Eigen::VectorXd sh = s.head(r).cwiseSqrt();
  const Eigen::MatrixXcd us = svd.matrixU().leftCols(r) * sh.asDiagonal();
  f.left = Eigen::MatrixXcd::Zero(m, r);
  for (std::size_t u = 0; u < used.size(); ++u) {
    const Eigen::MatrixXcd blk = qs[u].cast<cplx>() * us.middleRows(off[u], off[u + 1] - off[u]);
    const auto& rows = members[used[u]];
    for (std::size_t i = 0; i < rows.size(); ++i) f.left.row(rows[i]) = blk.row(static_cast<Index>(i));
  }
  f.right = qc * svd.matrixV().leftCols(r).conjugate() * sh.asDiagonal();
  f.singular_values.assign(s.data(), s.data() + r);
  f.target_eps = recompress_eps;
  return f;
}

}  // namespace jacfast
