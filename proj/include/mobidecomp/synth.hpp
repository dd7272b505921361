#ifndef MOBIDECOMP_SYNTH_HPP
#define MOBIDECOMP_SYNTH_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mobidecomp/common.hpp"
#include "mobidecomp/fit.hpp"
#include "mobidecomp/model.hpp"
#include "mobidecomp/panel.hpp"
#include "mobidecomp/special.hpp"

namespace mobi::synth {

enum class IncidenceScenario { two_wave, flat, zero };

inline IncidenceScenario scenario_from_name(const std::string& s) {
  if (s == "two_wave") return IncidenceScenario::two_wave;
  if (s == "flat") return IncidenceScenario::flat;
  if (s == "zero") return IncidenceScenario::zero;
  fail(ErrorKind::configuration_error, "unknown incidence scenario '" + s + "'");
}

inline const char* scenario_name(IncidenceScenario s) {
  switch (s) {
    case IncidenceScenario::two_wave: return "two_wave";
    case IncidenceScenario::flat: return "flat";
    case IncidenceScenario::zero: return "zero";
  }
  return "unknown";
}

struct SimOptions {
  double temp_mean = 12.0;       // deg C
  double temp_amplitude = 10.0;  // sinusoid half-range
  int temp_peak_week = 24;       // warmest study week
  double local_jitter_sd = 0.2;  // lognormal jitter of local vs national incidence
  double duration_floor = 0.01;  // hours/day; cells at or below are redrawn
  int max_redraws = 100;
};

struct SyntheticTruth {
  model::GlobalHypers hypers;                                  // constrained values
  std::vector<std::array<double, model::kNumOffsets>> offsets; // standardized, per district
  std::vector<double> unconstrained;                            // full flat vector
  WeeklyPanel panel;
  std::uint64_t seed = 0;
  IncidenceScenario scenario = IncidenceScenario::two_wave;
};

/// Prior-central hyperparameter values used by the default generator.
inline model::GlobalHypers default_hypers() {
  model::GlobalHypers h;
  h.mu_base = 0.0;
  h.sigma_base = 0.15;
  h.mu_w_phi = 0.15;
  h.sigma_w_phi = 0.05;
  h.mu_w_psi = 15.0;
  h.sigma_w_psi = 0.1;
  h.mu_w_chi = std::log(4.0);
  h.sigma_w_chi = 0.1;
  h.mu_v = 0.9;
  h.sigma_v = 0.05;
  h.mu_h = 0.95;
  h.sigma_h = 0.1;
  h.mu_c_phi = std::log(1.5);
  h.sigma_c_phi = 0.1;
  h.mu_c_psi = 30.0;
  h.sigma_c_psi = 0.08;
  h.mu_c_omega = 0.0;
  h.mu_c_g = 3.0;
  h.sigma_c_g = 0.2;
  h.alpha_c_g = 3.0;
  h.sigma_l = 0.25;
  return h;
}

namespace detail {

inline std::vector<std::string> synthetic_keys(int n_districts) {
  std::vector<std::string> keys;
  keys.reserve(static_cast<std::size_t>(n_districts));
  for (int d = 0; d < n_districts; ++d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "9%04d", d + 1);
    keys.emplace_back(buf);
  }
  return keys;
}

inline std::vector<double> unconstrain_hypers(const model::ParameterSpace& space,
                                              const model::GlobalHypers& h) {
  std::vector<double> u(static_cast<std::size_t>(model::kNumGlobals));
  const double c[model::kNumGlobals] = {
      h.mu_base,  h.sigma_base, h.mu_w_phi,  h.sigma_w_phi, h.mu_w_psi, h.sigma_w_psi,
      h.mu_w_chi, h.sigma_w_chi, h.mu_v,     h.sigma_v,     h.mu_h,     h.sigma_h,
      h.mu_c_phi, h.sigma_c_phi, h.mu_c_psi, h.sigma_c_psi, h.mu_c_omega, h.mu_c_g,
      h.sigma_c_g, h.alpha_c_g,  h.sigma_l};
  for (int i = 0; i < model::kNumGlobals; ++i) {
    u[static_cast<std::size_t>(i)] = space.unconstrain(i, c[i]);
  }
  return u;
}

inline void fill_calendar(WeeklyPanel& panel) {
  const int W = StudyCalendar::num_weeks;
  for (int d = 0; d < panel.n_districts(); ++d) {
    const int shift = d % 4;  // vacation schedules differ by state, not district
    for (int t = 1; t <= W; ++t) {
      int vacation = 0;
      if (t == 5) vacation = 3;                                   // spring break
      if (t >= 19 + shift && t <= 24 + shift) vacation = 5;       // summer break
      if (t == 33 + shift) vacation = 5;                          // fall break
      if (t == 42) vacation = 3;
      if (t == 43) vacation = 5;                                  // winter break
      int holidays = 0;
      if (t == 6 || t == 9 || t == 12 || t == 13 || t == 31 || t == 44) holidays = 1;
      if (t == 43) holidays = 2;  // the one two-holiday week
      const std::size_t i = panel.cell(d, t);
      panel.vacation_days[i] = vacation;
      panel.holiday_count[i] = holidays;
    }
  }
}

inline void fill_incidence(WeeklyPanel& panel, IncidenceScenario scenario,
                           const SimOptions& opt, std::mt19937_64& rng) {
  const int W = StudyCalendar::num_weeks;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < W; ++t) {
    double nat = 0.0;
    switch (scenario) {
      case IncidenceScenario::two_wave: {
        const double w1 = 54.0 * std::exp(-0.5 * ((t + 1 - 6.0) / 2.5) * ((t + 1 - 6.0) / 2.5));
        const double w2 = 251.0 * std::exp(-0.5 * ((t + 1 - 44.0) / 5.0) * ((t + 1 - 44.0) / 5.0));
        nat = w1 + w2;
        break;
      }
      case IncidenceScenario::flat: nat = 100.0; break;
      case IncidenceScenario::zero: nat = 0.0; break;
    }
    panel.incidence_national[static_cast<std::size_t>(t)] = nat;
  }
  for (int d = 0; d < panel.n_districts(); ++d) {
    for (int t = 1; t <= W; ++t) {
      const double nat = panel.incidence_national[static_cast<std::size_t>(t - 1)];
      const double jitter =
          scenario == IncidenceScenario::zero ? 1.0 : std::exp(opt.local_jitter_sd * normal(rng));
      panel.incidence_local[panel.cell(d, t)] = nat * jitter;
    }
  }
}

inline void fill_temperature(WeeklyPanel& panel, const SimOptions& opt) {
  const int W = StudyCalendar::num_weeks;
  for (int d = 0; d < panel.n_districts(); ++d) {
    for (int t = 1; t <= W; ++t) {
      panel.tmax[panel.cell(d, t)] =
          opt.temp_mean +
          opt.temp_amplitude *
              std::cos(2.0 * 3.14159265358979323846 * (t - opt.temp_peak_week) / 52.0);
    }
  }
}

}  // namespace detail

/// Forward simulation from a full unconstrained parameter vector. Observation
/// noise is Student-t (nu = 4); non-positive draws are redrawn with a floor,
/// a documented mismatch with the untruncated fit likelihood that is
/// negligible at default scales.
inline SyntheticTruth simulate_from_vector(const model::ParameterSpace& space,
                                           std::vector<double> x, std::uint64_t seed,
                                           IncidenceScenario scenario,
                                           const SimOptions& opt = {}) {
  const int n_districts = space.n_districts();
  SyntheticTruth truth;
  truth.seed = seed;
  truth.scenario = scenario;

  WeeklyPanel& panel = truth.panel;
  const int W = StudyCalendar::num_weeks;
  for (const auto& key : space.district_keys()) panel.districts.push_back({key, key});
  const std::size_t n_cells = static_cast<std::size_t>(n_districts) * W;
  panel.duration.assign(n_cells, 1.0);
  panel.incidence_local.assign(n_cells, 0.0);
  panel.incidence_national.assign(W, 0.0);
  panel.tmax.assign(n_cells, 0.0);
  panel.vacation_days.assign(n_cells, 0);
  panel.holiday_count.assign(n_cells, 0);

  std::mt19937_64 rng(derive_seed(seed, 0x53494dULL));
  detail::fill_temperature(panel, opt);
  detail::fill_calendar(panel);
  detail::fill_incidence(panel, scenario, opt, rng);

  const model::ModelData data = model::ModelData::prepare(panel);
  const auto predicted = model::predict_panel<double>(space, data, x);

  const double sigma_l = space.constrain(model::kSigmaL, x[model::kSigmaL]);
  std::student_t_distribution<double> t4(4.0);
  for (std::size_t i = 0; i < n_cells; ++i) {
    double value = 0.0;
    int tries = 0;
    do {
      value = predicted[i] + sigma_l * t4(rng);
      ++tries;
    } while (value <= opt.duration_floor && tries < opt.max_redraws);
    panel.duration[i] = value > opt.duration_floor ? value : opt.duration_floor;
  }
  panel.validate();

  truth.hypers = model::constrain_globals(space, x);
  truth.offsets.resize(static_cast<std::size_t>(n_districts));
  for (int d = 0; d < n_districts; ++d) {
    for (int o = 0; o < model::kNumOffsets; ++o) {
      truth.offsets[static_cast<std::size_t>(d)][static_cast<std::size_t>(o)] =
          x[static_cast<std::size_t>(space.offset(d, static_cast<model::OffsetIndex>(o)))];
    }
  }
  truth.unconstrained = std::move(x);
  return truth;
}

/// Simulation from fixed hyperparameters; district offsets are drawn N(0,1).
inline SyntheticTruth simulate_panel(const model::GlobalHypers& hypers, int n_districts,
                                     std::uint64_t seed, IncidenceScenario scenario,
                                     const SimOptions& opt = {}) {
  if (n_districts < 1 || n_districts > 400) {
    fail(ErrorKind::configuration_error, "n_districts must be in 1..400");
  }
  const model::ParameterSpace space(detail::synthetic_keys(n_districts));
  std::vector<double> x(static_cast<std::size_t>(space.dim()), 0.0);
  const auto u = detail::unconstrain_hypers(space, hypers);
  std::copy(u.begin(), u.end(), x.begin());
  std::mt19937_64 rng(derive_seed(seed, 0x4f464653ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = static_cast<std::size_t>(model::kNumGlobals); i < x.size(); ++i) {
    x[i] = normal(rng);
  }
  return simulate_from_vector(space, std::move(x), seed, scenario, opt);
}

// ---------------------------------------------------------------------------
// Simulation-based calibration.
// ---------------------------------------------------------------------------

struct SbcConfig {
  int n_replicates = 50;
  int n_districts = 3;
  sampler::ChainConfig fit;  // reduced budget by default, see constructor
  int n_ranks = 63;          // thinned posterior draws per replicate
  int n_bins = 20;
  std::uint64_t seed = 20240901;
  IncidenceScenario scenario = IncidenceScenario::two_wave;
  double likelihood_scale_factor = 1.0;  // 0.5 = deliberately corrupted fit
  int n_threads = 1;

  SbcConfig() {
    fit.n_chains = 2;
    fit.n_tune = 500;
    fit.n_draws = 250;
  }
};

struct SbcResult {
  std::vector<std::string> hyper_names;
  int n_ranks = 0;
  int n_bins = 0;
  std::vector<std::vector<int>> ranks;  // [hyper][successful replicate]
  int n_failures = 0;
  std::vector<double> chi2;
  std::vector<bool> uniform_ok;
  double chi2_critical = 0.0;

  int n_uniform_ok() const {
    int n = 0;
    for (bool ok : uniform_ok) n += ok ? 1 : 0;
    return n;
  }
};

namespace detail {

/// Chi-square goodness of fit of ranks in 0..n_ranks against uniformity,
/// binned; bin widths need not divide evenly (expected mass follows width).
inline double rank_chi2(const std::vector<int>& ranks, int n_ranks, int n_bins) {
  const int n_values = n_ranks + 1;
  std::vector<int> observed(static_cast<std::size_t>(n_bins), 0);
  for (int r : ranks) {
    const int bin = std::min(n_bins - 1, r * n_bins / n_values);
    ++observed[static_cast<std::size_t>(bin)];
  }
  std::vector<int> width(static_cast<std::size_t>(n_bins), 0);
  for (int v = 0; v < n_values; ++v) {
    ++width[static_cast<std::size_t>(std::min(n_bins - 1, v * n_bins / n_values))];
  }
  const double n = static_cast<double>(ranks.size());
  double stat = 0.0;
  for (int b = 0; b < n_bins; ++b) {
    const double expected = n * width[static_cast<std::size_t>(b)] / n_values;
    const double diff = observed[static_cast<std::size_t>(b)] - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

}  // namespace detail

/// Draws truths from the prior, simulates, refits, and records the rank of
/// each true global hyperparameter among thinned posterior draws. Under a
/// correct implementation the ranks are uniform.
inline SbcResult run_sbc(const SbcConfig& cfg) {
  if (cfg.n_replicates < 1) {
    fail(ErrorKind::configuration_error, "n_replicates must be positive");
  }
  if (cfg.n_ranks < 9 || cfg.n_bins < 2) {
    fail(ErrorKind::configuration_error, "need at least 10 rank values and 2 bins");
  }
  const model::ParameterSpace space(detail::synthetic_keys(cfg.n_districts));

  SbcResult result;
  for (int gidx = 0; gidx < model::kNumGlobals; ++gidx) result.hyper_names.push_back(space.name(gidx));
  result.n_ranks = cfg.n_ranks;
  result.n_bins = cfg.n_bins;

  std::vector<std::vector<int>> replicate_ranks(
      static_cast<std::size_t>(cfg.n_replicates),
      std::vector<int>(static_cast<std::size_t>(model::kNumGlobals), -1));
  std::vector<char> failed(static_cast<std::size_t>(cfg.n_replicates), 0);

  parallel_for(static_cast<std::size_t>(cfg.n_replicates), cfg.n_threads, [&](std::size_t r) {
    try {
      std::mt19937_64 rng(derive_seed(cfg.seed, r));
      std::vector<double> x_true = space.sample_prior(rng);
      const SyntheticTruth truth = simulate_from_vector(
          space, std::move(x_true), derive_seed(cfg.seed, 0x100000ULL + r), cfg.scenario);

      model::ModelData data = model::ModelData::prepare(truth.panel);
      data.likelihood_scale_factor = cfg.likelihood_scale_factor;
      sampler::ChainConfig fit_cfg = cfg.fit;
      fit_cfg.seed = derive_seed(cfg.seed, 0x200000ULL + r);
      const sampler::FitResult fit = model::fit_panel(fit_cfg, space, data, 1);

      const int total = fit.draws.n_total();
      for (int g = 0; g < model::kNumGlobals; ++g) {
        const double truth_c = space.constrain(g, truth.unconstrained[static_cast<std::size_t>(g)]);
        int rank = 0;
        for (int j = 0; j < cfg.n_ranks; ++j) {
          const int idx = static_cast<int>((static_cast<std::int64_t>(j + 1) * total) /
                                           (cfg.n_ranks + 1));
          const double draw_c = space.constrain(g, fit.draws.flat_draw(idx)[static_cast<std::size_t>(g)]);
          rank += draw_c < truth_c ? 1 : 0;
        }
        replicate_ranks[r][static_cast<std::size_t>(g)] = rank;
      }
    } catch (const Error&) {
      failed[r] = 1;
    }
  });

  for (std::size_t r = 0; r < failed.size(); ++r) result.n_failures += failed[r];
  if (result.n_failures * 10 > cfg.n_replicates) {
    fail(ErrorKind::adaptation_failure,
         std::to_string(result.n_failures) + " of " + std::to_string(cfg.n_replicates) +
             " replicates failed (over the 10% budget)");
  }

  result.ranks.assign(static_cast<std::size_t>(model::kNumGlobals), {});
  for (std::size_t r = 0; r < replicate_ranks.size(); ++r) {
    if (failed[r]) continue;
    for (int g = 0; g < model::kNumGlobals; ++g) {
      result.ranks[static_cast<std::size_t>(g)].push_back(replicate_ranks[r][static_cast<std::size_t>(g)]);
    }
  }

  result.chi2_critical = math::chi_squared_quantile(cfg.n_bins - 1, 0.99);
  for (int g = 0; g < model::kNumGlobals; ++g) {
    const double stat =
        detail::rank_chi2(result.ranks[static_cast<std::size_t>(g)], cfg.n_ranks, cfg.n_bins);
    result.chi2.push_back(stat);
    result.uniform_ok.push_back(stat <= result.chi2_critical);
  }
  return result;
}

inline void save_sbc_ranks_csv(const SbcResult& result, const std::string& path) {
  CsvWriter w(path);
  w.row({"hyper", "replicate", "rank"});
  for (std::size_t g = 0; g < result.hyper_names.size(); ++g) {
    for (std::size_t r = 0; r < result.ranks[g].size(); ++r) {
      w.row({result.hyper_names[g], std::to_string(r), std::to_string(result.ranks[g][r])});
    }
  }
  w.close();
}

}  // namespace mobi::synth

#endif  // MOBIDECOMP_SYNTH_HPP
