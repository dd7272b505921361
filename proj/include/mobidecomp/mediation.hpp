#ifndef MOBIDECOMP_MEDIATION_HPP
#define MOBIDECOMP_MEDIATION_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mobidecomp/common.hpp"
#include "mobidecomp/stats.hpp"

namespace mobi::stats {

/// Path decomposition per covariate: direct effect c on the outcome, path a
/// into the mediator, the shared mediator->outcome slope b, indirect a*b,
/// and total c + a*b. Intervals are percentile bootstrap over row resampling.
struct MediationFit {
  double b = 0.0;                       // mediator -> outcome
  double b_lo = 0.0, b_hi = 0.0;
  std::vector<double> a;                // covariate -> mediator
  std::vector<double> direct;           // c
  std::vector<double> indirect;         // a * b
  std::vector<double> total;            // c + a * b
  std::vector<double> direct_lo, direct_hi;
  std::vector<double> indirect_lo, indirect_hi;
  std::vector<double> total_lo, total_hi;
  int n_boot = 0;
  int n_boot_effective = 0;  // resamples that produced a nonsingular fit
};

namespace detail {

struct MediationPaths {
  std::vector<double> a, c;
  double b = 0.0;
};

/// Two OLS stages: m ~ [1 X] and y ~ [1 m X].
inline bool mediation_paths(const Eigen::MatrixXd& X, const Eigen::VectorXd& m,
                            const Eigen::VectorXd& y, MediationPaths& out) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  Eigen::MatrixXd stage1(n, k + 1);
  stage1.col(0).setOnes();
  stage1.middleCols(1, k) = X;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr1(stage1);
  qr1.setThreshold(1e-10);
  if (qr1.rank() < k + 1) return false;
  const Eigen::VectorXd beta1 = qr1.solve(m);

  Eigen::MatrixXd stage2(n, k + 2);
  stage2.col(0).setOnes();
  stage2.col(1) = m;
  stage2.middleCols(2, k) = X;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr2(stage2);
  qr2.setThreshold(1e-10);
  if (qr2.rank() < k + 2) return false;
  const Eigen::VectorXd beta2 = qr2.solve(y);

  out.a.resize(static_cast<std::size_t>(k));
  out.c.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    out.a[static_cast<std::size_t>(j)] = beta1[j + 1];
    out.c[static_cast<std::size_t>(j)] = beta2[j + 2];
  }
  out.b = beta2[1];
  return true;
}

inline std::pair<double, double> percentile_ci(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.025), quantile_sorted(v, 0.975)};
}

}  // namespace detail

/// Mediator path model: covariates act on the outcome directly and through
/// the mediator. Point decomposition total = direct + indirect is exact.
inline MediationFit mediation_sem(const Eigen::MatrixXd& X, const Eigen::VectorXd& m,
                                  const Eigen::VectorXd& y, int n_boot, std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (n != m.size() || n != y.size() || k < 1) {
    fail(ErrorKind::configuration_error, "mediation inputs have mismatched shapes");
  }
  if (n_boot < 200) {
    fail(ErrorKind::configuration_error, "n_boot must be at least 200");
  }

  detail::MediationPaths paths;
  if (!detail::mediation_paths(X, m, y, paths)) {
    fail(ErrorKind::singular_design, "singular design in a mediation stage");
  }

  MediationFit fit;
  fit.b = paths.b;
  fit.a = paths.a;
  fit.n_boot = n_boot;
  fit.direct = paths.c;
  fit.indirect.resize(static_cast<std::size_t>(k));
  fit.total.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    fit.indirect[ju] = paths.a[ju] * paths.b;
    fit.total[ju] = paths.c[ju] + fit.indirect[ju];
  }

  // Percentile bootstrap over district (row) resampling, fixed seed.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<std::vector<double>> boot_direct(static_cast<std::size_t>(k));
  std::vector<std::vector<double>> boot_indirect(static_cast<std::size_t>(k));
  std::vector<std::vector<double>> boot_total(static_cast<std::size_t>(k));
  std::vector<double> boot_b;
  Eigen::MatrixXd Xb(n, k);
  Eigen::VectorXd mb(n), yb(n);
  detail::MediationPaths bp;
  for (int r = 0; r < n_boot; ++r) {
    for (int i = 0; i < n; ++i) {
      const int src = pick(rng);
      Xb.row(i) = X.row(src);
      mb[i] = m[src];
      yb[i] = y[src];
    }
    if (!detail::mediation_paths(Xb, mb, yb, bp)) continue;
    ++fit.n_boot_effective;
    boot_b.push_back(bp.b);
    for (int j = 0; j < k; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      boot_direct[ju].push_back(bp.c[ju]);
      boot_indirect[ju].push_back(bp.a[ju] * bp.b);
      boot_total[ju].push_back(bp.c[ju] + bp.a[ju] * bp.b);
    }
  }
  if (fit.n_boot_effective < n_boot / 2) {
    fail(ErrorKind::singular_design, "more than half of bootstrap resamples were singular");
  }

  std::tie(fit.b_lo, fit.b_hi) = detail::percentile_ci(boot_b);
  fit.direct_lo.resize(static_cast<std::size_t>(k));
  fit.direct_hi.resize(static_cast<std::size_t>(k));
  fit.indirect_lo.resize(static_cast<std::size_t>(k));
  fit.indirect_hi.resize(static_cast<std::size_t>(k));
  fit.total_lo.resize(static_cast<std::size_t>(k));
  fit.total_hi.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    std::tie(fit.direct_lo[ju], fit.direct_hi[ju]) = detail::percentile_ci(boot_direct[ju]);
    std::tie(fit.indirect_lo[ju], fit.indirect_hi[ju]) = detail::percentile_ci(boot_indirect[ju]);
    std::tie(fit.total_lo[ju], fit.total_hi[ju]) = detail::percentile_ci(boot_total[ju]);
  }
  return fit;
}

}  // namespace mobi::stats

#endif  // MOBIDECOMP_MEDIATION_HPP
