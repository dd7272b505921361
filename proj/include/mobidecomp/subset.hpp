#ifndef MOBIDECOMP_SUBSET_HPP
#define MOBIDECOMP_SUBSET_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "mobidecomp/common.hpp"

namespace mobi::stats {

struct SubsetFit {
  std::vector<int> columns;  // 0-based indices into X, ascending
  double r2 = 0.0;
  double adj_r2 = -std::numeric_limits<double>::infinity();
};

struct SearchResult {
  std::vector<SubsetFit> best_per_size;  // entry s-1 holds the best size-s subset
  std::uint64_t n_enumerated = 0;
  std::uint64_t n_singular = 0;
};

namespace detail {

/// In-place Cholesky solve on a stack buffer; returns false when a pivot
/// collapses (singular subset).
inline bool cholesky_solve(double* a, double* b, int p, double tol) {
  for (int j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (int k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > tol)) return false;
    const double l = std::sqrt(d);
    a[j * p + j] = l;
    for (int i = j + 1; i < p; ++i) {
      double v = a[i * p + j];
      for (int k = 0; k < j; ++k) v -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = v / l;
    }
  }
  for (int i = 0; i < p; ++i) {
    double v = b[i];
    for (int k = 0; k < i; ++k) v -= a[i * p + k] * b[k];
    b[i] = v / a[i * p + i];
  }
  for (int i = p - 1; i >= 0; --i) {
    double v = b[i];
    for (int k = i + 1; k < p; ++k) v -= a[k * p + i] * b[k];
    b[i] = v / a[i * p + i];
  }
  return true;
}

/// Strict order used everywhere a best subset is chosen: higher adjusted R2
/// wins, exact ties go to the lexicographically smaller column list. Total,
/// so results cannot depend on enumeration schedule.
inline bool subset_better(double adj, const std::vector<int>& cols, const SubsetFit& best) {
  if (adj > best.adj_r2) return true;
  if (adj < best.adj_r2) return false;
  return cols < best.columns;
}

}  // namespace detail

/// Enumerates every nonempty column subset (k <= 20), fitting each by least
/// squares through the precomputed Gram matrix, and keeps the adjusted-R2
/// argmax per size.
inline SearchResult exhaustive_search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      int n_threads = 1) {
  const int k = static_cast<int>(X.cols());
  const int n = static_cast<int>(X.rows());
  if (k < 1 || k > 20) {
    fail(ErrorKind::configuration_error, "exhaustive search supports 1..20 columns");
  }
  if (n <= k + 1) fail(ErrorKind::singular_design, "need n > k + 1 rows");

  // Gram matrix of [1 X y]; every subset fit reduces to a small solve.
  Eigen::MatrixXd a(n, k + 2);
  a.col(0).setOnes();
  a.middleCols(1, k) = X;
  a.col(k + 1) = y;
  const Eigen::MatrixXd gram = a.transpose() * a;
  const double syy = gram(k + 1, k + 1);
  const double y_mean = gram(0, k + 1) / n;
  const double sst = syy - n * y_mean * y_mean;
  if (!(sst > 0.0)) fail(ErrorKind::degenerate_column, "response is constant");
  const double tol = 1e-12 * gram.diagonal().head(k + 1).maxCoeff();

  const std::uint64_t n_masks = (1ULL << k) - 1;
  const int workers = std::max(1, std::min(n_threads, max_workers()));

  std::vector<std::vector<SubsetFit>> best_per_worker(
      static_cast<std::size_t>(workers), std::vector<SubsetFit>(static_cast<std::size_t>(k)));
  std::vector<std::uint64_t> singular_per_worker(static_cast<std::size_t>(workers), 0);

  parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t w) {
    double sub[22 * 22];
    double rhs[22];
    int idx[22];
    auto& best = best_per_worker[w];
    for (std::uint64_t mask = 1 + w; mask <= n_masks;
         mask += static_cast<std::uint64_t>(workers)) {
      const int size = std::popcount(mask);
      const int p = size + 1;
      idx[0] = 0;
      int m = 1;
      for (int j = 0; j < k; ++j) {
        if (mask & (1ULL << j)) idx[m++] = j + 1;
      }
      for (int r = 0; r < p; ++r) {
        for (int c = 0; c <= r; ++c) sub[r * p + c] = gram(idx[r], idx[c]);
        rhs[r] = gram(idx[r], k + 1);
      }
      double b[22];
      for (int r = 0; r < p; ++r) b[r] = rhs[r];
      if (!detail::cholesky_solve(sub, b, p, tol)) {
        ++singular_per_worker[w];
        continue;
      }
      double sse = syy;
      for (int r = 0; r < p; ++r) sse -= b[r] * rhs[r];
      sse = std::max(sse, 0.0);
      const double r2 = 1.0 - sse / sst;
      const double adj = 1.0 - (1.0 - r2) * (n - 1.0) / (n - p);
      SubsetFit& slot = best[static_cast<std::size_t>(size - 1)];
      std::vector<int> cols;
      cols.reserve(static_cast<std::size_t>(size));
      for (int j = 0; j < k; ++j) {
        if (mask & (1ULL << j)) cols.push_back(j);
      }
      if (detail::subset_better(adj, cols, slot)) {
        slot.columns = std::move(cols);
        slot.r2 = r2;
        slot.adj_r2 = adj;
      }
    }
  });

  SearchResult out;
  out.n_enumerated = n_masks;
  out.best_per_size.assign(static_cast<std::size_t>(k), SubsetFit{});
  for (int w = 0; w < workers; ++w) {
    out.n_singular += singular_per_worker[static_cast<std::size_t>(w)];
    for (int s = 0; s < k; ++s) {
      const SubsetFit& cand = best_per_worker[static_cast<std::size_t>(w)][static_cast<std::size_t>(s)];
      if (cand.columns.empty()) continue;
      if (detail::subset_better(cand.adj_r2, cand.columns, out.best_per_size[static_cast<std::size_t>(s)])) {
        out.best_per_size[static_cast<std::size_t>(s)] = cand;
      }
    }
  }
  return out;
}

}  // namespace mobi::stats

#endif  // MOBIDECOMP_SUBSET_HPP
