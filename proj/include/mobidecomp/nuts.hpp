#ifndef MOBIDECOMP_NUTS_HPP
#define MOBIDECOMP_NUTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mobidecomp/common.hpp"
#include "mobidecomp/draws.hpp"

// No-U-Turn sampler with multinomial trajectory sampling, dual-averaging
// step-size adaptation and windowed diagonal metric estimation.
//
// REFERENCES: Hoffman & Gelman (2014), JMLR 15; Betancourt (2017),
// arXiv:1701.02434 for the multinomial variant.

namespace mobi::sampler {

/// Log density and gradient oracle. Must return -inf (not throw) when the
/// density cannot be evaluated; the sampler treats that as a divergence.
using GradFn = std::function<double(std::span<const double>, std::span<double>)>;

struct ChainConfig {
  int n_chains = 4;
  int n_tune = 2000;
  int n_draws = 1000;
  int max_tree_depth = 10;
  double target_accept = 0.8;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_chains < 1 || n_tune < 1 || n_draws < 1 || max_tree_depth < 0) {
      fail(ErrorKind::configuration_error, "chain counts must be positive");
    }
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
      fail(ErrorKind::configuration_error, "target_accept must lie in (0,1)");
    }
  }
};

/// Position, momentum, and the cached density/gradient at the position.
struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> grad;
  double logp = 0.0;
};

inline double kinetic_energy(std::span<const double> p, std::span<const double> inv_mass) {
  double k = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) k += p[i] * p[i] * inv_mass[i];
  return 0.5 * k;
}

inline double hamiltonian(const PhasePoint& z, std::span<const double> inv_mass) {
  return -z.logp + kinetic_energy(z.p, inv_mass);
}

/// One symplectic leapfrog step with signed step size. Returns false when the
/// gradient evaluation fails (caller records a divergence). The map is
/// exactly reversible: negating the momentum and stepping again returns to
/// the start up to roundoff.
inline bool leapfrog(PhasePoint& z, double eps, std::span<const double> inv_mass,
                     const GradFn& grad_fn) {
  const std::size_t n = z.q.size();
  for (std::size_t i = 0; i < n; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  for (std::size_t i = 0; i < n; ++i) z.q[i] += eps * inv_mass[i] * z.p[i];
  z.logp = grad_fn(z.q, z.grad);
  if (!std::isfinite(z.logp)) return false;
  for (std::size_t i = 0; i < n; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  return true;
}

namespace detail {

constexpr double kMaxEnergyError = 1000.0;

inline double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Original trajectory no-U-turn criterion with the diagonal metric folded
/// into the momenta.
inline bool no_u_turn(const PhasePoint& left, const PhasePoint& right,
                      std::span<const double> inv_mass) {
  double dot_minus = 0.0, dot_plus = 0.0;
  for (std::size_t i = 0; i < left.q.size(); ++i) {
    const double dq = right.q[i] - left.q[i];
    dot_minus += dq * inv_mass[i] * left.p[i];
    dot_plus += dq * inv_mass[i] * right.p[i];
  }
  return dot_minus >= 0.0 && dot_plus >= 0.0;
}

struct Subtree {
  PhasePoint left;      // backward-most state, trajectory order
  PhasePoint right;     // forward-most state
  PhasePoint proposal;  // multinomial sample from the subtree
  double proposal_energy = 0.0;
  double log_sum_weight = -std::numeric_limits<double>::infinity();
  double sum_metro = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
  bool valid = false;  // no divergence and no internal U-turn
};

/// Builds a balanced subtree of 2^depth leapfrog states from `edge` in
/// direction `sign`.
inline Subtree build_tree(int depth, const PhasePoint& edge, int sign, double eps, double h0,
                          std::span<const double> inv_mass, const GradFn& grad_fn,
                          std::mt19937_64& rng) {
  if (depth == 0) {
    Subtree leaf;
    leaf.proposal = edge;
    const bool ok = leapfrog(leaf.proposal, sign * eps, inv_mass, grad_fn);
    leaf.n_leapfrog = 1;
    double h = ok ? hamiltonian(leaf.proposal, inv_mass)
                  : std::numeric_limits<double>::infinity();
    if (!std::isfinite(h)) h = std::numeric_limits<double>::infinity();
    const double delta = h - h0;
    leaf.sum_metro = delta > 0.0 ? std::exp(-delta) : 1.0;
    if (!ok || delta > kMaxEnergyError) {
      leaf.divergent = true;
      leaf.valid = false;
      return leaf;
    }
    leaf.left = leaf.proposal;
    leaf.right = leaf.proposal;
    leaf.proposal_energy = h;
    leaf.log_sum_weight = -delta;
    leaf.valid = true;
    return leaf;
  }

  Subtree first = build_tree(depth - 1, edge, sign, eps, h0, inv_mass, grad_fn, rng);
  if (!first.valid) return first;
  const PhasePoint& next_edge = sign > 0 ? first.right : first.left;
  Subtree second = build_tree(depth - 1, next_edge, sign, eps, h0, inv_mass, grad_fn, rng);

  Subtree merged;
  merged.n_leapfrog = first.n_leapfrog + second.n_leapfrog;
  merged.sum_metro = first.sum_metro + second.sum_metro;
  merged.divergent = first.divergent || second.divergent;
  if (!second.valid) {
    merged.valid = false;
    return merged;
  }
  merged.left = sign > 0 ? std::move(first.left) : std::move(second.left);
  merged.right = sign > 0 ? std::move(second.right) : std::move(first.right);
  merged.log_sum_weight = log_add_exp(first.log_sum_weight, second.log_sum_weight);
  // Uniform multinomial choice between the halves, by weight.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double p_second = std::exp(second.log_sum_weight - merged.log_sum_weight);
  if (unif(rng) < p_second) {
    merged.proposal = std::move(second.proposal);
    merged.proposal_energy = second.proposal_energy;
  } else {
    merged.proposal = std::move(first.proposal);
    merged.proposal_energy = first.proposal_energy;
  }
  merged.valid = no_u_turn(merged.left, merged.right, inv_mass);
  return merged;
}

}  // namespace detail

/// One NUTS transition from z (which must hold a finite cached density).
/// Grows a doubling trajectory until the U-turn criterion, a divergence, or
/// the depth cap; samples the next state multinomially with the standard
/// bias toward the fresh subtree. max_tree_depth = 0 degenerates to a single
/// accept/reject leapfrog step.
inline IterStats nuts_draw(PhasePoint& z, const GradFn& grad_fn, double eps,
                           std::span<const double> inv_mass, int max_tree_depth,
                           std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < z.p.size(); ++i) {
    z.p[i] = normal(rng) / std::sqrt(inv_mass[i]);
  }
  const double h0 = hamiltonian(z, inv_mass);

  PhasePoint traj_left = z;
  PhasePoint traj_right = z;
  PhasePoint proposal = z;
  double proposal_energy = h0;
  double log_sum_weight = 0.0;

  IterStats stats;
  stats.step_size = eps;

  const int n_doublings = std::max(1, max_tree_depth);
  int depth = 0;
  while (depth < n_doublings) {
    const int sign = unif(rng) < 0.5 ? -1 : 1;
    const PhasePoint& edge = sign > 0 ? traj_right : traj_left;
    detail::Subtree sub =
        detail::build_tree(depth, edge, sign, eps, h0, inv_mass, grad_fn, rng);
    stats.n_leapfrog += sub.n_leapfrog;
    stats.accept_stat += sub.sum_metro;
    stats.divergent = stats.divergent || sub.divergent;
    if (!sub.valid) break;
    ++depth;
    if (sign > 0) {
      traj_right = sub.right;
    } else {
      traj_left = sub.left;
    }
    // Biased progressive sampling: always move into a heavier fresh subtree.
    if (std::log(unif(rng)) < sub.log_sum_weight - log_sum_weight) {
      proposal = std::move(sub.proposal);
      proposal_energy = sub.proposal_energy;
    }
    log_sum_weight = detail::log_add_exp(log_sum_weight, sub.log_sum_weight);
    if (!detail::no_u_turn(traj_left, traj_right, inv_mass)) break;
  }

  stats.tree_depth = depth;
  stats.accept_stat = stats.n_leapfrog > 0 ? stats.accept_stat / stats.n_leapfrog : 0.0;
  stats.energy = proposal_energy;
  z.q = std::move(proposal.q);
  z.grad = std::move(proposal.grad);
  z.logp = proposal.logp;
  return stats;
}

// ---------------------------------------------------------------------------
// Warmup adaptation.
// ---------------------------------------------------------------------------

namespace detail {

/// Nesterov dual averaging of the log step size toward a target acceptance
/// statistic (Hoffman & Gelman 2014, Sec. 3.2).
class DualAverage {
 public:
  DualAverage(double eps0, double target) { restart(eps0, target); }

  void restart(double eps0, double target) {
    mu_ = std::log(10.0 * eps0);
    log_eps_ = std::log(eps0);
    log_eps_bar_ = std::log(eps0);
    h_bar_ = 0.0;
    m_ = 1.0;
    target_ = target;
  }

  void update(double accept_stat) {
    const double w = 1.0 / (m_ + kT0);
    h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - accept_stat);
    log_eps_ = mu_ - std::sqrt(m_) / kGamma * h_bar_;
    const double w2 = std::pow(m_, -kKappa);
    log_eps_bar_ = w2 * log_eps_ + (1.0 - w2) * log_eps_bar_;
    m_ += 1.0;
  }

  double current() const { return std::exp(log_eps_); }
  double averaged() const { return std::exp(log_eps_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double mu_ = 0.0, log_eps_ = 0.0, log_eps_bar_ = 0.0, h_bar_ = 0.0, m_ = 1.0, target_ = 0.8;
};

/// Streaming mean/variance for the metric windows.
class Welford {
 public:
  explicit Welford(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void add(std::span<const double> x) {
    ++n_;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean_[i];
      mean_[i] += d / static_cast<double>(n_);
      m2_[i] += d * (x[i] - mean_[i]);
    }
  }

  std::size_t count() const { return n_; }

  /// Regularized variance estimate (shrunk toward 1e-3 for short windows).
  std::vector<double> regularized_variance() const {
    std::vector<double> v(mean_.size(), 1.0);
    if (n_ < 2) return v;
    const double n = static_cast<double>(n_);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double var = m2_[i] / (n - 1.0);
      v[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
    }
    return v;
  }

  void reset() {
    n_ = 0;
    std::fill(mean_.begin(), mean_.end(), 0.0);
    std::fill(m2_.begin(), m2_.end(), 0.0);
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Step-size search: doubles/halves until the one-step acceptance crosses
/// 1/2 (Hoffman & Gelman 2014, Algorithm 4).
inline double find_reasonable_epsilon(const PhasePoint& start, std::span<const double> inv_mass,
                                      const GradFn& grad_fn, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double eps = 1.0;
  PhasePoint z = start;
  for (std::size_t i = 0; i < z.p.size(); ++i) z.p[i] = normal(rng) / std::sqrt(inv_mass[i]);
  const double h0 = hamiltonian(z, inv_mass);

  auto accept_of = [&](double step) {
    PhasePoint trial = z;
    if (!leapfrog(trial, step, inv_mass, grad_fn)) return 0.0;
    const double h = hamiltonian(trial, inv_mass);
    if (!std::isfinite(h)) return 0.0;
    return std::exp(std::min(0.0, h0 - h));
  };

  double a = accept_of(eps);
  const bool go_up = a > 0.5;
  for (int it = 0; it < 50; ++it) {
    if (go_up) {
      if (a <= 0.5) break;
      eps *= 2.0;
    } else {
      if (a >= 0.5) break;
      eps *= 0.5;
    }
    if (eps > 1e7 || eps < 1e-10) break;
    a = accept_of(eps);
  }
  return std::clamp(go_up ? eps * 0.5 : eps, 1e-10, 1e7);
}

struct WindowSchedule {
  int init_end;    // fast start buffer [0, init_end)
  int term_start;  // fast end buffer [term_start, n_tune)
  std::vector<int> window_ends;  // closing iterations of the slow windows
};

inline WindowSchedule plan_windows(int n_tune) {
  WindowSchedule s;
  // The step-size average restarts at the last metric update, so the final
  // buffer must be long enough for it to re-converge.
  int init = 75, term = std::max(50, n_tune / 4), base = 25;
  if (n_tune < init + term + base) {
    init = std::max(1, static_cast<int>(0.15 * n_tune));
    term = std::max(1, static_cast<int>(0.25 * n_tune));
    base = std::max(1, n_tune - init - term);
  }
  s.init_end = init;
  s.term_start = n_tune - term;
  int start = init;
  int width = base;
  while (start < s.term_start) {
    int end = start + width;
    // Absorb a final stub window into the last full one.
    if (end > s.term_start || s.term_start - end < width * 2) end = s.term_start;
    s.window_ends.push_back(end);
    start = end;
    width *= 2;
  }
  return s;
}

}  // namespace detail

struct WarmupResult {
  double step_size = 0.0;
  std::vector<double> inv_mass;
  PhasePoint state;
};

/// Warmup protocol: dual-averaging step size toward target_accept, with
/// expanding slow windows estimating the diagonal metric from the draws.
/// Adaptation is frozen afterward.
inline WarmupResult warmup(const ChainConfig& cfg, const GradFn& grad_fn,
                           std::vector<double> init_q, std::mt19937_64& rng) {
  if (cfg.n_tune < 100) {
    fail(ErrorKind::configuration_error, "n_tune below the 100-step minimum");
  }
  const std::size_t dim = init_q.size();
  PhasePoint z;
  z.q = std::move(init_q);
  z.p.assign(dim, 0.0);
  z.grad.assign(dim, 0.0);
  z.logp = grad_fn(z.q, z.grad);
  if (!std::isfinite(z.logp)) {
    fail(ErrorKind::adaptation_failure, "initial point has non-finite log density");
  }

  std::vector<double> inv_mass(dim, 1.0);
  const auto schedule = detail::plan_windows(cfg.n_tune);
  double eps = detail::find_reasonable_epsilon(z, inv_mass, grad_fn, rng);
  detail::DualAverage da(eps, cfg.target_accept);

  std::size_t window_cursor = 0;
  detail::Welford welford(dim);
  int divergent_in_term = 0;
  int term_draws = 0;

  for (int it = 0; it < cfg.n_tune; ++it) {
    const IterStats st = nuts_draw(z, grad_fn, da.current(), inv_mass, cfg.max_tree_depth, rng);
    da.update(st.accept_stat);
    if (it >= schedule.term_start) {
      ++term_draws;
      divergent_in_term += st.divergent ? 1 : 0;
      continue;
    }
    if (it < schedule.init_end) continue;
    welford.add(z.q);
    if (window_cursor < schedule.window_ends.size() &&
        it + 1 == schedule.window_ends[window_cursor]) {
      inv_mass = welford.regularized_variance();
      welford.reset();
      ++window_cursor;
      eps = detail::find_reasonable_epsilon(z, inv_mass, grad_fn, rng);
      da.restart(eps, cfg.target_accept);
    }
  }

  if (term_draws > 0 && divergent_in_term * 2 > term_draws) {
    fail(ErrorKind::adaptation_failure,
         "more than half of final-window draws diverged (step size " +
             std::to_string(da.averaged()) + ")");
  }

  WarmupResult out;
  out.step_size = da.averaged();
  out.inv_mass = std::move(inv_mass);
  out.state = std::move(z);
  return out;
}

// ---------------------------------------------------------------------------
// Multi-chain orchestration.
// ---------------------------------------------------------------------------

struct FitResult {
  PosteriorDraws draws;
  std::vector<double> step_size;                // per chain
  std::vector<std::vector<double>> inv_mass;    // per chain
};

/// Runs cfg.n_chains independent chains. Each chain owns its RNG stream
/// (derived from the seed), gradient context, and state; draws are identical
/// for any worker count.
inline FitResult run_chains(const ChainConfig& cfg, int dim,
                            const std::function<GradFn(int)>& make_grad,
                            const std::function<std::vector<double>(std::mt19937_64&)>& make_init,
                            const std::vector<std::string>& param_names, int n_threads) {
  cfg.validate();
  FitResult result;
  result.draws.param_names = param_names;
  result.draws.n_chains = cfg.n_chains;
  result.draws.n_iters = cfg.n_draws;
  result.draws.values.assign(static_cast<std::size_t>(cfg.n_chains) *
                                 static_cast<std::size_t>(cfg.n_draws) * param_names.size(),
                             0.0);
  result.draws.stats.assign(
      static_cast<std::size_t>(cfg.n_chains) * static_cast<std::size_t>(cfg.n_draws),
      IterStats{});
  result.step_size.assign(static_cast<std::size_t>(cfg.n_chains), 0.0);
  result.inv_mass.assign(static_cast<std::size_t>(cfg.n_chains), {});

  parallel_for(static_cast<std::size_t>(cfg.n_chains), n_threads, [&](std::size_t chain) {
    const int c = static_cast<int>(chain);
    try {
      std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));
      const GradFn grad_fn = make_grad(c);

      std::vector<double> init;
      bool ok = false;
      std::vector<double> probe(static_cast<std::size_t>(dim));
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        init = make_init(rng);
        if (static_cast<int>(init.size()) != dim) {
          fail(ErrorKind::configuration_error, "init vector has wrong dimension");
        }
        ok = std::isfinite(grad_fn(init, probe));
      }
      if (!ok) {
        fail(ErrorKind::adaptation_failure, "no finite initial point found");
      }

      WarmupResult w = warmup(cfg, grad_fn, std::move(init), rng);
      result.step_size[chain] = w.step_size;
      result.inv_mass[chain] = w.inv_mass;
      PhasePoint z = std::move(w.state);
      for (int i = 0; i < cfg.n_draws; ++i) {
        const IterStats st =
            nuts_draw(z, grad_fn, w.step_size, w.inv_mass, cfg.max_tree_depth, rng);
        result.draws.stats[static_cast<std::size_t>(c) * static_cast<std::size_t>(cfg.n_draws) +
                           static_cast<std::size_t>(i)] = st;
        double* dst = result.draws.values.data() + result.draws.index(c, i, 0);
        for (int p = 0; p < dim; ++p) dst[p] = z.q[static_cast<std::size_t>(p)];
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "chain " + std::to_string(c) + ": " + e.what());
    }
  });
  return result;
}

}  // namespace mobi::sampler

#endif  // MOBIDECOMP_NUTS_HPP
