#ifndef MOBIDECOMP_STATS_HPP
#define MOBIDECOMP_STATS_HPP

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mobidecomp/common.hpp"
#include "mobidecomp/special.hpp"

namespace mobi::stats {

/// z-scores a column in place: mean 0, sample SD 1 (n-1 denominator).
inline void standardize_column(std::vector<double>& column, const std::string& name) {
  if (column.size() < 2) fail(ErrorKind::degenerate_column, "column '" + name + "' too short");
  double mean = 0.0;
  for (double v : column) mean += v;
  mean /= static_cast<double>(column.size());
  double ss = 0.0;
  for (double v : column) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(column.size() - 1));
  if (!(sd > 0.0)) fail(ErrorKind::degenerate_column, "column '" + name + "' is constant");
  for (double& v : column) v = (v - mean) / sd;
}

inline std::vector<double> standardize(std::vector<double> column,
                                       const std::string& name = "column") {
  standardize_column(column, name);
  return column;
}

struct RegressionFit {
  std::vector<double> coef;      // including intercept, design column order
  std::vector<double> se;
  std::vector<double> t_stat;
  std::vector<double> p_value;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double pred_r2 = 0.0;  // 1 - PRESS/SST
  double sse = 0.0;
  double sst = 0.0;
  double press = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  int n = 0;
  int p = 0;  // parameters including intercept
  bool exact_fit = false;       // SSE at the numerical floor; AIC/BIC are -inf
  bool press_defined = true;    // false when some hat diagonal is 1
};

/// Least squares on a design that already carries its intercept column.
/// Standard errors from sigma^2 (X'X)^-1, p-values from t with n-p df,
/// PRESS through the hat-diagonal identity.
inline RegressionFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n <= p) fail(ErrorKind::singular_design, "need more rows than parameters");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    const auto perm = qr.colsPermutation().indices();
    std::string cols;
    for (int i = qr.rank(); i < p; ++i) {
      cols += (cols.empty() ? "" : ", ") + std::to_string(perm[i]);
    }
    fail(ErrorKind::singular_design, "rank-deficient design; dependent columns: " + cols);
  }

  RegressionFit fit;
  fit.n = n;
  fit.p = p;
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * beta;
  fit.sse = resid.squaredNorm();
  const double y_mean = y.mean();
  fit.sst = (y.array() - y_mean).square().sum();
  fit.r2 = fit.sst > 0.0 ? 1.0 - fit.sse / fit.sst : 1.0;
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / static_cast<double>(n - p);

  const Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  const double sigma2 = fit.sse / static_cast<double>(n - p);
  fit.coef.resize(static_cast<std::size_t>(p));
  fit.se.resize(static_cast<std::size_t>(p));
  fit.t_stat.resize(static_cast<std::size_t>(p));
  fit.p_value.resize(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    fit.coef[static_cast<std::size_t>(j)] = beta[j];
    const double se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(j, j)));
    fit.se[static_cast<std::size_t>(j)] = se;
    const double t = se > 0.0 ? beta[j] / se : 0.0;
    fit.t_stat[static_cast<std::size_t>(j)] = t;
    fit.p_value[static_cast<std::size_t>(j)] =
        se > 0.0 ? math::student_t_p_two_sided(t, static_cast<double>(n - p)) : 1.0;
  }

  // PRESS via leave-one-out identity e_i / (1 - h_i).
  fit.press = 0.0;
  for (int i = 0; i < n; ++i) {
    const double h = X.row(i) * xtx_inv * X.row(i).transpose();
    if (h >= 1.0 - 1e-10) {
      fit.press_defined = false;
      fit.press = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    const double loo = resid[i] / (1.0 - h);
    fit.press += loo * loo;
  }
  fit.pred_r2 = fit.press_defined && fit.sst > 0.0
                    ? 1.0 - fit.press / fit.sst
                    : std::numeric_limits<double>::quiet_NaN();

  const double sse_floor = 1e-12 * std::max(1.0, fit.sst);
  if (fit.sse <= sse_floor) {
    fit.exact_fit = true;
    fit.aic = -std::numeric_limits<double>::infinity();
    fit.bic = -std::numeric_limits<double>::infinity();
  } else {
    // Gaussian profile-likelihood convention.
    const double base = n * std::log(fit.sse / n);
    fit.aic = base + 2.0 * p;
    fit.bic = base + p * std::log(static_cast<double>(n));
  }
  return fit;
}

struct SelectionCriteria {
  double adj_r2 = 0.0;
  double pred_r2 = 0.0;
  double cp = 0.0;
  double aic = 0.0;
  double bic = 0.0;
};

/// Criteria for comparing subset fits of the same data. sigma2_full is the
/// full-model error variance entering Mallow's Cp.
inline SelectionCriteria selection_criteria(const RegressionFit& fit, double sigma2_full) {
  if (fit.exact_fit) {
    fail(ErrorKind::sse_floor, "SSE at numerical floor; information criteria are -infinity");
  }
  if (!fit.press_defined) {
    fail(ErrorKind::press_undefined, "a hat diagonal equals 1; PRESS undefined");
  }
  if (!(sigma2_full > 0.0)) {
    fail(ErrorKind::domain_error, "full-model variance must be positive");
  }
  SelectionCriteria c;
  c.adj_r2 = fit.adj_r2;
  c.pred_r2 = fit.pred_r2;
  c.cp = fit.sse / sigma2_full - fit.n + 2.0 * fit.p;
  c.aic = fit.aic;
  c.bic = fit.bic;
  return c;
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 0.0;
};

/// Welch two-sample t-test with Satterthwaite degrees of freedom.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    fail(ErrorKind::insufficient_data, "each group needs at least two values");
  }
  auto moments = [](std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
    return std::pair<double, double>(mean, var);
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  if (!(va > 0.0) && !(vb > 0.0)) {
    fail(ErrorKind::insufficient_data, "both groups have zero variance");
  }
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) /
         (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  r.p = math::student_t_p_two_sided(r.t, r.df);
  return r;
}

/// 90th percentile of a weekly series over an inclusive week window,
/// linear-interpolation quantile convention.
inline double peak_incidence(std::span<const double> series, int week_lo, int week_hi) {
  if (week_lo < 1 || week_hi > static_cast<int>(series.size()) || week_lo > week_hi) {
    fail(ErrorKind::range_error, "empty or out-of-range wave window");
  }
  std::vector<double> window(series.begin() + (week_lo - 1), series.begin() + week_hi);
  return quantile(std::move(window), 0.9);
}

}  // namespace mobi::stats

#endif  // MOBIDECOMP_STATS_HPP
