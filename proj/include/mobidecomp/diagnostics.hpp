#ifndef MOBIDECOMP_DIAGNOSTICS_HPP
#define MOBIDECOMP_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobidecomp/common.hpp"
#include "mobidecomp/draws.hpp"

namespace mobi::sampler {

namespace detail {

inline void check_chain_shape(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) fail(ErrorKind::undefined_diagnostic, "need at least 2 chains");
  for (const auto& c : chains) {
    if (c.size() < 4) fail(ErrorKind::undefined_diagnostic, "need at least 4 draws per chain");
    if (c.size() != chains[0].size()) {
      fail(ErrorKind::undefined_diagnostic, "chains have unequal lengths");
    }
  }
}

/// Splits each chain in half, dropping the middle draw of odd-length chains.
inline std::vector<std::vector<double>> split_halves(
    const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  halves.reserve(chains.size() * 2);
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return halves;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_var(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

/// Autocovariance at all lags, biased (divide by n), per chain.
inline std::vector<double> autocovariance(const std::vector<double>& v) {
  const std::size_t n = v.size();
  const double mean = mean_of(v);
  std::vector<double> acov(n, 0.0);
  for (std::size_t lag = 0; lag < n; ++lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (v[i] - mean) * (v[i + lag] - mean);
    acov[lag] = s / static_cast<double>(n);
  }
  return acov;
}

struct VarianceDecomposition {
  double within = 0.0;    // W
  double var_plus = 0.0;  // (n-1)/n W + B/n
  std::size_t n = 0;      // draws per (half-)chain
  std::size_t m = 0;      // number of (half-)chains
};

inline VarianceDecomposition decompose(const std::vector<std::vector<double>>& chains) {
  VarianceDecomposition out;
  out.m = chains.size();
  out.n = chains[0].size();
  std::vector<double> means(out.m);
  double w = 0.0;
  for (std::size_t j = 0; j < out.m; ++j) {
    means[j] = mean_of(chains[j]);
    w += sample_var(chains[j], means[j]);
  }
  w /= static_cast<double>(out.m);
  const double grand = mean_of(means);
  double b_over_n = 0.0;
  for (double mj : means) b_over_n += (mj - grand) * (mj - grand);
  b_over_n /= static_cast<double>(out.m - 1);
  out.within = w;
  out.var_plus = (static_cast<double>(out.n - 1) / static_cast<double>(out.n)) * w + b_over_n;
  return out;
}

}  // namespace detail

/// Split potential-scale-reduction factor (rank-free). Values near 1 mean the
/// half-chains agree in location and spread.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  detail::check_chain_shape(chains);
  const auto halves = detail::split_halves(chains);
  const auto vd = detail::decompose(halves);
  if (!(vd.within > 0.0)) {
    fail(ErrorKind::undefined_diagnostic, "zero within-chain variance");
  }
  return std::sqrt(vd.var_plus / vd.within);
}

/// Effective sample size: autocorrelation-sum estimator with Geyer's initial
/// monotone sequence, combined across split half-chains.
inline double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  detail::check_chain_shape(chains);
  const auto halves = detail::split_halves(chains);
  const auto vd = detail::decompose(halves);
  if (!(vd.within > 0.0) || !(vd.var_plus > 0.0)) {
    fail(ErrorKind::undefined_diagnostic, "zero within-chain variance");
  }
  const std::size_t m = vd.m;
  const std::size_t n = vd.n;

  std::vector<std::vector<double>> acov;
  acov.reserve(m);
  for (const auto& c : halves) acov.push_back(detail::autocovariance(c));

  auto rho_hat = [&](std::size_t lag) {
    double mean_acov = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean_acov += acov[j][lag];
    mean_acov /= static_cast<double>(m);
    // Biased acov at lag 0 scaled to the sample variance convention.
    const double w_lag = mean_acov * (static_cast<double>(n) / static_cast<double>(n - 1));
    return 1.0 - (vd.within - w_lag) / vd.var_plus;
  };

  // Paired sums rho_{2k} + rho_{2k+1}; truncate at the first negative pair
  // and enforce monotone nonincreasing sums.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho_hat(2 * k) + rho_hat(2 * k + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n) + 10.0));
  return static_cast<double>(m * n) / tau;
}

struct ParamDiagnostic {
  std::string name;
  double rhat = 0.0;
  double ess = 0.0;
};

struct DiagnosticsReport {
  std::vector<ParamDiagnostic> params;
  int n_divergent = 0;
  double rhat_max = 0.0;
  double ess_min = 0.0;
  // The run-level gate uses the looser threshold; the conventional one is
  // reported alongside for reference.
  double threshold_strict = 1.01;
  double threshold_gate = 1.07;

  bool all_converged_gate() const { return rhat_max < threshold_gate; }
  bool all_converged_strict() const { return rhat_max < threshold_strict; }

  nlohmann::json to_json() const {
    nlohmann::json per_param = nlohmann::json::array();
    for (const auto& p : params) {
      per_param.push_back({{"name", p.name},
                           {"rhat", p.rhat},
                           {"ess", p.ess},
                           {"exceeds_1.07", p.rhat >= 1.07},
                           {"exceeds_1.01", p.rhat >= 1.01}});
    }
    return nlohmann::json{{"parameters", per_param},
                          {"n_divergent", n_divergent},
                          {"rhat_max", rhat_max},
                          {"ess_min", ess_min},
                          {"converged_at_1.07", all_converged_gate()},
                          {"converged_at_1.01", all_converged_strict()}};
  }
};

inline DiagnosticsReport diagnose(const PosteriorDraws& draws) {
  DiagnosticsReport report;
  report.rhat_max = 0.0;
  report.ess_min = std::numeric_limits<double>::infinity();
  for (int p = 0; p < draws.n_params(); ++p) {
    const auto chains = draws.chains_of(p);
    ParamDiagnostic d;
    d.name = draws.param_names[static_cast<std::size_t>(p)];
    d.rhat = split_rhat(chains);
    d.ess = effective_sample_size(chains);
    report.rhat_max = std::max(report.rhat_max, d.rhat);
    report.ess_min = std::min(report.ess_min, d.ess);
    report.params.push_back(std::move(d));
  }
  for (int c = 0; c < draws.n_chains; ++c) {
    for (int i = 0; i < draws.n_iters; ++i) {
      report.n_divergent += draws.stat(c, i).divergent ? 1 : 0;
    }
  }
  return report;
}

}  // namespace mobi::sampler

#endif  // MOBIDECOMP_DIAGNOSTICS_HPP
