#ifndef MOBIDECOMP_CLI_HPP
#define MOBIDECOMP_CLI_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobidecomp/diagnostics.hpp"
#include "mobidecomp/fit.hpp"
#include "mobidecomp/ingest.hpp"
#include "mobidecomp/mediation.hpp"
#include "mobidecomp/stats.hpp"
#include "mobidecomp/subset.hpp"
#include "mobidecomp/summaries.hpp"
#include "mobidecomp/synth.hpp"

namespace mobi::cli {

/// Everything a run needs, from one JSON document; flags only override the
/// output directory and verbosity.
struct RunConfig {
  ingest::PanelPaths panel_paths;
  std::string covariates_path;
  sampler::ChainConfig chains;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool verbose = false;
  int n_threads = 0;  // 0 = max_workers()

  post::WaveWindow wave_first = post::first_wave();
  post::WaveWindow wave_second = post::second_wave();

  std::vector<std::string> search_variables;  // exhaustive-search candidates
  std::vector<std::string> final_variables;   // final regression / SEM set
  int n_boot = 1000;

  int sim_districts = 5;
  std::string sim_scenario = "two_wave";

  synth::SbcConfig sbc;

  int workers() const { return n_threads > 0 ? n_threads : max_workers(); }
};

/// The union of variables the selection step keeps for the final regressions.
/// share_65_plus is intentionally absent: it moves with average_age and is
/// treated as the same signal.
inline std::vector<std::string> default_final_variables() {
  return {"population_density", "voter_turnout", "income", "childcare_share",
          "cdu", "spd", "green_party", "fdp", "afd", "average_age",
          "unemployment_rate", "employment_rate", "agriculture_forestry_fisheries",
          "finance_sector"};
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io_error, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse_error, path + ": " + e.what());
  }

  RunConfig cfg;
  if (j.contains("inputs")) {
    const auto& in_j = j["inputs"];
    auto get = [&](const char* key) { return in_j.value(key, std::string()); };
    cfg.panel_paths.duration = get("duration");
    cfg.panel_paths.incidence_local = get("incidence_local");
    cfg.panel_paths.incidence_national = get("incidence_national");
    cfg.panel_paths.tmax = get("tmax");
    cfg.panel_paths.calendar = get("calendar");
    cfg.panel_paths.adjacency = get("adjacency");
    cfg.covariates_path = get("covariates");
  }
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.out_dir = j.value("out_dir", std::string("out"));
  cfg.n_threads = j.value("threads", 0);

  if (j.contains("chains")) {
    const auto& c = j["chains"];
    cfg.chains.n_chains = c.value("n_chains", 4);
    cfg.chains.n_tune = c.value("n_tune", 2000);
    cfg.chains.n_draws = c.value("n_draws", 1000);
    cfg.chains.max_tree_depth = c.value("max_tree_depth", 10);
    cfg.chains.target_accept = c.value("target_accept", 0.8);
  }
  cfg.chains.seed = cfg.seed;

  auto read_wave = [&](const char* key, post::WaveWindow base) {
    if (!j.contains("waves") || !j["waves"].contains(key)) return base;
    const auto& w = j["waves"][key];
    base.week_lo = w.value("week_lo", base.week_lo);
    base.week_hi = w.value("week_hi", base.week_hi);
    base.t_lo = w.value("t_lo", static_cast<double>(base.week_lo - 1));
    base.t_hi = w.value("t_hi", static_cast<double>(base.week_hi));
    if (base.week_lo < 1 || base.week_hi > StudyCalendar::num_weeks ||
        base.week_lo > base.week_hi) {
      fail(ErrorKind::configuration_error, std::string("invalid wave window '") + key + "'");
    }
    return base;
  };
  cfg.wave_first = read_wave("first", cfg.wave_first);
  cfg.wave_second = read_wave("second", cfg.wave_second);

  cfg.search_variables = covariate_columns();
  cfg.final_variables = default_final_variables();
  if (j.contains("regression")) {
    const auto& r = j["regression"];
    if (r.contains("search_variables")) {
      cfg.search_variables = r["search_variables"].get<std::vector<std::string>>();
    }
    if (r.contains("final_variables")) {
      cfg.final_variables = r["final_variables"].get<std::vector<std::string>>();
    }
    cfg.n_boot = r.value("n_boot", 1000);
  }

  if (j.contains("simulate")) {
    cfg.sim_districts = j["simulate"].value("n_districts", 5);
    cfg.sim_scenario = j["simulate"].value("scenario", std::string("two_wave"));
  }

  if (j.contains("sbc")) {
    const auto& s = j["sbc"];
    cfg.sbc.n_replicates = s.value("n_replicates", 50);
    cfg.sbc.n_districts = s.value("n_districts", 3);
    cfg.sbc.fit.n_chains = s.value("n_chains", 2);
    cfg.sbc.fit.n_tune = s.value("n_tune", 500);
    cfg.sbc.fit.n_draws = s.value("n_draws", 250);
    cfg.sbc.likelihood_scale_factor = s.value("fault_scale", 1.0);
  }
  cfg.sbc.seed = cfg.seed;
  return cfg;
}

namespace detail {

inline void log_line(const RunConfig& cfg, const std::string& msg) {
  if (cfg.verbose) std::fprintf(stderr, "[mobidecomp] %s\n", msg.c_str());
}

inline void ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) fail(ErrorKind::io_error, "cannot create output directory '" + cfg.out_dir + "'");
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io_error, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline void require_file(const std::string& path, const std::string& hint) {
  if (path.empty() || !std::filesystem::exists(path)) {
    fail(ErrorKind::missing_prerequisite, "missing " + hint + " ('" + path + "')");
  }
}

inline model::ParameterSpace space_of(const WeeklyPanel& panel) {
  std::vector<std::string> keys;
  keys.reserve(panel.districts.size());
  for (const auto& d : panel.districts) keys.push_back(d.ags);
  return model::ParameterSpace(std::move(keys));
}

inline WeeklyPanel load_panel_checked(const RunConfig& cfg) {
  require_file(cfg.panel_paths.duration, "duration file");
  require_file(cfg.panel_paths.incidence_local, "local incidence file");
  require_file(cfg.panel_paths.incidence_national, "national incidence file");
  require_file(cfg.panel_paths.tmax, "temperature file");
  require_file(cfg.panel_paths.calendar, "calendar file");
  return ingest::load_panel(cfg.panel_paths);
}

/// Aligns covariates to the panel districts and z-scores the named columns
/// into an Eigen design (no intercept).
inline Eigen::MatrixXd standardized_design(const CovariateTable& table,
                                           const std::vector<std::string>& variables) {
  Eigen::MatrixXd X(table.n_districts(), static_cast<int>(variables.size()));
  for (std::size_t v = 0; v < variables.size(); ++v) {
    auto col = stats::standardize(table.column_values(variables[v]), variables[v]);
    for (int d = 0; d < table.n_districts(); ++d) {
      X(d, static_cast<int>(v)) = col[static_cast<std::size_t>(d)];
    }
  }
  return X;
}

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out(X.rows(), X.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(X.cols()) = X;
  return out;
}

inline nlohmann::json regression_report(const RunConfig& cfg, const CovariateTable& cov,
                                        const std::vector<double>& outcome,
                                        const std::string& wave_label) {
  const int n = cov.n_districts();
  Eigen::VectorXd y(n);
  {
    auto std_y = stats::standardize(outcome, "reaction_strength");
    for (int i = 0; i < n; ++i) y[i] = std_y[static_cast<std::size_t>(i)];
  }

  const Eigen::MatrixXd X_search = standardized_design(cov, cfg.search_variables);
  const auto search = stats::exhaustive_search(X_search, y, cfg.workers());

  // Full-model error variance for Mallow's Cp.
  const auto full_fit = stats::ols(with_intercept(X_search), y);
  const double sigma2_full = full_fit.sse / (full_fit.n - full_fit.p);

  nlohmann::json sizes = nlohmann::json::array();
  for (std::size_t s = 0; s < search.best_per_size.size(); ++s) {
    const auto& subset = search.best_per_size[s];
    if (subset.columns.empty()) continue;
    Eigen::MatrixXd Xs(n, static_cast<int>(subset.columns.size()));
    nlohmann::json names = nlohmann::json::array();
    for (std::size_t c = 0; c < subset.columns.size(); ++c) {
      Xs.col(static_cast<int>(c)) = X_search.col(subset.columns[c]);
      names.push_back(cfg.search_variables[static_cast<std::size_t>(subset.columns[c])]);
    }
    const auto fit = stats::ols(with_intercept(Xs), y);
    const auto crit = stats::selection_criteria(fit, sigma2_full);
    sizes.push_back({{"size", s + 1},
                     {"variables", names},
                     {"r2", fit.r2},
                     {"adj_r2", crit.adj_r2},
                     {"pred_r2", crit.pred_r2},
                     {"cp", crit.cp},
                     {"aic", crit.aic},
                     {"bic", crit.bic}});
  }

  const Eigen::MatrixXd X_final = standardized_design(cov, cfg.final_variables);
  const auto final_fit = stats::ols(with_intercept(X_final), y);
  nlohmann::json coefficients = nlohmann::json::array();
  coefficients.push_back({{"variable", "intercept"},
                          {"coefficient", final_fit.coef[0]},
                          {"std_error", final_fit.se[0]},
                          {"t", final_fit.t_stat[0]},
                          {"p_value", final_fit.p_value[0]}});
  for (std::size_t v = 0; v < cfg.final_variables.size(); ++v) {
    coefficients.push_back({{"variable", cfg.final_variables[v]},
                            {"coefficient", final_fit.coef[v + 1]},
                            {"std_error", final_fit.se[v + 1]},
                            {"t", final_fit.t_stat[v + 1]},
                            {"p_value", final_fit.p_value[v + 1]}});
  }

  return nlohmann::json{
      {"wave", wave_label},
      {"n_districts", n},
      {"subsets_enumerated", search.n_enumerated},
      {"subsets_singular", search.n_singular},
      {"best_subsets", sizes},
      {"final_model",
       {{"variables", cfg.final_variables},
        {"coefficients", coefficients},
        {"r2", final_fit.r2},
        {"adj_r2", final_fit.adj_r2},
        {"pred_r2", final_fit.pred_r2},
        {"aic", final_fit.aic},
        {"bic", final_fit.bic}}}};
}

inline nlohmann::json sem_report(const RunConfig& cfg, const CovariateTable& cov,
                                 const std::vector<double>& mediator,
                                 const std::vector<double>& peak,
                                 const std::string& wave_label) {
  const int n = cov.n_districts();
  const Eigen::MatrixXd X = standardized_design(cov, cfg.final_variables);
  Eigen::VectorXd m(n), y(n);
  {
    auto std_m = stats::standardize(mediator, "reaction_strength");
    auto std_y = stats::standardize(peak, "peak_incidence");
    for (int i = 0; i < n; ++i) {
      m[i] = std_m[static_cast<std::size_t>(i)];
      y[i] = std_y[static_cast<std::size_t>(i)];
    }
  }
  const auto fit = stats::mediation_sem(X, m, y, cfg.n_boot, derive_seed(cfg.seed, 0x5e3));

  nlohmann::json paths = nlohmann::json::array();
  for (std::size_t v = 0; v < cfg.final_variables.size(); ++v) {
    paths.push_back({{"variable", cfg.final_variables[v]},
                     {"a_mediator_path", fit.a[v]},
                     {"direct", fit.direct[v]},
                     {"direct_ci", {fit.direct_lo[v], fit.direct_hi[v]}},
                     {"indirect", fit.indirect[v]},
                     {"indirect_ci", {fit.indirect_lo[v], fit.indirect_hi[v]}},
                     {"total", fit.total[v]},
                     {"total_ci", {fit.total_lo[v], fit.total_hi[v]}}});
  }
  return nlohmann::json{{"wave", wave_label},
                        {"n_districts", n},
                        {"mediator", "reaction_strength"},
                        {"outcome", "peak_incidence_p90"},
                        {"mediator_effect_b", fit.b},
                        {"mediator_effect_ci", {fit.b_lo, fit.b_hi}},
                        {"n_boot", fit.n_boot},
                        {"n_boot_effective", fit.n_boot_effective},
                        {"paths", paths}};
}

inline CovariateTable load_covariates_checked(const RunConfig& cfg) {
  require_file(cfg.covariates_path, "covariates file");
  return ingest::load_covariates(cfg.covariates_path);
}

/// Synthetic covariates for planted regression/SEM runs: plausible ranges,
/// round-robin district types.
inline CovariateTable synthetic_covariates(const std::vector<DistrictId>& districts,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 0xC0FAULL));
  std::normal_distribution<double> nd(0.0, 1.0);
  auto clamp = [](double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); };
  CovariateTable t;
  t.districts = districts;
  for (std::size_t d = 0; d < districts.size(); ++d) {
    std::vector<double> row(19);
    row[0] = std::exp(5.3 + 1.0 * nd(rng));                 // population_density
    row[1] = 27800.0 + 3000.0 * nd(rng);                    // income
    row[2] = clamp(45.2 + 1.5 * nd(rng), 35.0, 55.0);       // average_age
    row[3] = clamp(22.3 + 2.0 * nd(rng), 10.0, 35.0);       // share_65_plus
    row[4] = clamp(33.1 + 6.0 * nd(rng), 5.0, 70.0);        // childcare_share
    row[5] = clamp(5.5 + 1.5 * nd(rng), 0.5, 15.0);         // unemployment_rate
    row[6] = clamp(62.2 + 3.0 * nd(rng), 40.0, 80.0);       // employment_rate
    row[7] = clamp(70.7 + 7.0 * nd(rng), 30.0, 95.0);       // service_sectors
    row[8] = clamp(27.4 + 7.0 * nd(rng), 5.0, 60.0);        // manufacturing_sector
    row[9] = clamp(24.4 + 3.0 * nd(rng), 10.0, 40.0);       // tthic_sectors
    row[10] = clamp(14.1 + 3.0 * nd(rng), 3.0, 30.0);       // finance_sector
    row[11] = clamp(6.7 + 1.6 * nd(rng), 1.0, 15.0);        // construction
    row[12] = clamp(1.9 + 1.2 * nd(rng), 0.0, 10.0);        // agriculture_forestry_fisheries
    row[13] = clamp(76.3 + 3.0 * nd(rng), 50.0, 95.0);      // voter_turnout
    row[14] = clamp(25.0 + 4.0 * nd(rng), 5.0, 50.0);       // cdu
    row[15] = clamp(25.7 + 4.0 * nd(rng), 5.0, 50.0);       // spd
    row[16] = clamp(11.4 + 4.0 * nd(rng), 0.5, 35.0);       // afd
    row[17] = clamp(11.1 + 1.5 * nd(rng), 2.0, 25.0);       // fdp
    row[18] = clamp(12.8 + 3.0 * nd(rng), 1.0, 30.0);       // green_party
    t.values.push_back(std::move(row));
    t.district_type.push_back(static_cast<DistrictType>(d % 5));
  }
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands. Return values are process exit codes: 0 success, 1 error,
// 2 completed with failed convergence diagnostics.
// ---------------------------------------------------------------------------

inline int cmd_fit(const RunConfig& cfg) {
  detail::ensure_out_dir(cfg);
  const WeeklyPanel panel = detail::load_panel_checked(cfg);
  const model::ParameterSpace space = detail::space_of(panel);
  const model::ModelData data = model::ModelData::prepare(panel);
  detail::log_line(cfg, "fitting " + std::to_string(panel.n_districts()) + " districts, dim " +
                            std::to_string(space.dim()));

  const sampler::FitResult fit = model::fit_panel(cfg.chains, space, data, cfg.workers());
  const sampler::DiagnosticsReport report = sampler::diagnose(fit.draws);

  sampler::save_draws_csv(fit.draws, cfg.out_dir + "/draws.csv");
  sampler::save_sampler_stats_csv(fit.draws, cfg.out_dir + "/sampler_stats.csv");
  detail::write_json(space.layout_json(), cfg.out_dir + "/params_layout.json");
  detail::write_json(report.to_json(), cfg.out_dir + "/diagnostics.json");

  detail::log_line(cfg, "rhat_max " + std::to_string(report.rhat_max) + ", divergences " +
                            std::to_string(report.n_divergent));
  return report.all_converged_gate() ? 0 : 2;
}

inline int cmd_summarize(const RunConfig& cfg) {
  detail::ensure_out_dir(cfg);
  detail::require_file(cfg.out_dir + "/draws.csv", "draws (run fit first)");
  const WeeklyPanel panel = detail::load_panel_checked(cfg);
  const model::ParameterSpace space = detail::space_of(panel);
  const model::ModelData data = model::ModelData::prepare(panel);
  const sampler::PosteriorDraws draws = sampler::load_draws_csv(cfg.out_dir + "/draws.csv");

  const post::FactorTrajectory traj = post::factor_trajectories(draws, space, data);
  post::save_trajectories_csv(traj, cfg.out_dir + "/trajectories.csv");

  const auto first = post::reaction_strength_all(draws, space, cfg.wave_first);
  const auto second = post::reaction_strength_all(draws, space, cfg.wave_second);
  post::save_reaction_strength_csv(space.district_keys(), first, second,
                                   cfg.out_dir + "/reaction_strength.csv");

  post::save_scalar_summary_csv(space.district_keys(), post::local_weight_summary(draws, space),
                                "omega", cfg.out_dir + "/omega.csv");
  post::save_scalar_summary_csv(space.district_keys(), post::fatigue_summary(draws, space),
                                "lambda", cfg.out_dir + "/lambda.csv");
  return 0;
}

namespace detail {

/// Welch tests on group means between adjacent district types (the
/// urban-rural gradient). Pairs with a group smaller than two are skipped.
inline nlohmann::json group_comparisons(const CovariateTable& cov,
                                        const std::vector<double>& outcome) {
  std::vector<std::vector<double>> groups(5);
  for (int d = 0; d < cov.n_districts(); ++d) {
    groups[static_cast<std::size_t>(cov.district_type[static_cast<std::size_t>(d)])].push_back(
        outcome[static_cast<std::size_t>(d)]);
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (int t = 0; t + 1 < 5; ++t) {
    const auto type_a = static_cast<DistrictType>(t);
    const auto type_b = static_cast<DistrictType>(t + 1);
    nlohmann::json entry{{"group_a", district_type_name(type_a)},
                         {"group_b", district_type_name(type_b)},
                         {"n_a", groups[static_cast<std::size_t>(t)].size()},
                         {"n_b", groups[static_cast<std::size_t>(t + 1)].size()}};
    try {
      const auto r = stats::welch_t_test(groups[static_cast<std::size_t>(t)],
                                         groups[static_cast<std::size_t>(t + 1)]);
      entry["t"] = r.t;
      entry["df"] = r.df;
      entry["p_value"] = r.p;
    } catch (const Error& e) {
      entry["skipped"] = error_kind_name(e.kind());
    }
    pairs.push_back(std::move(entry));
  }
  return pairs;
}

}  // namespace detail

inline int cmd_regress(const RunConfig& cfg) {
  detail::ensure_out_dir(cfg);
  const CovariateTable cov = detail::load_covariates_checked(cfg);
  detail::require_file(cfg.out_dir + "/reaction_strength.csv",
                       "reaction strengths (run summarize first)");
  std::vector<std::string> keys;
  for (const auto& d : cov.districts) keys.push_back(d.ags);

  nlohmann::json comparisons;
  for (const auto* wave : {"first", "second"}) {
    const auto summaries =
        post::load_reaction_strength_csv(cfg.out_dir + "/reaction_strength.csv", keys, wave);
    std::vector<double> outcome;
    outcome.reserve(summaries.size());
    for (const auto& s : summaries) outcome.push_back(s.median);
    const auto report = detail::regression_report(cfg, cov, outcome, wave);
    detail::write_json(report,
                       cfg.out_dir + "/regression_report_" + std::string(wave) + "_wave.json");
    comparisons[wave] = detail::group_comparisons(cov, outcome);
  }
  detail::write_json(nlohmann::json{{"outcome", "reaction_strength"},
                                    {"test", "welch"},
                                    {"waves", comparisons}},
                     cfg.out_dir + "/group_comparisons.json");
  return 0;
}

inline int cmd_sem(const RunConfig& cfg) {
  detail::ensure_out_dir(cfg);
  const CovariateTable cov = detail::load_covariates_checked(cfg);
  detail::require_file(cfg.out_dir + "/reaction_strength.csv",
                       "reaction strengths (run summarize first)");
  const WeeklyPanel panel = detail::load_panel_checked(cfg);
  std::vector<std::string> keys;
  for (const auto& d : cov.districts) keys.push_back(d.ags);

  for (const auto& [label, window] :
       {std::pair{std::string("first"), cfg.wave_first},
        std::pair{std::string("second"), cfg.wave_second}}) {
    const auto summaries =
        post::load_reaction_strength_csv(cfg.out_dir + "/reaction_strength.csv", keys, label);
    std::vector<double> mediator;
    for (const auto& s : summaries) mediator.push_back(s.median);
    std::vector<double> peak;
    for (const auto& key : keys) {
      const int d = panel.district_index(key);
      std::span<const double> series{panel.incidence_local.data() + panel.cell(d, 1),
                                     static_cast<std::size_t>(StudyCalendar::num_weeks)};
      peak.push_back(stats::peak_incidence(series, window.week_lo, window.week_hi));
    }
    const auto report = detail::sem_report(cfg, cov, mediator, peak, label);
    detail::write_json(report, cfg.out_dir + "/sem_report_" + label + "_wave.json");
  }
  return 0;
}

inline int cmd_simulate(const RunConfig& cfg) {
  detail::ensure_out_dir(cfg);
  const synth::SyntheticTruth truth =
      synth::simulate_panel(synth::default_hypers(), cfg.sim_districts, cfg.seed,
                            synth::scenario_from_name(cfg.sim_scenario));
  ingest::save_panel(truth.panel, cfg.out_dir);
  ingest::save_covariates(detail::synthetic_covariates(truth.panel.districts, cfg.seed),
                          cfg.out_dir + "/covariates.csv");

  nlohmann::json hypers;
  const model::ParameterSpace space = detail::space_of(truth.panel);
  for (int g = 0; g < model::kNumGlobals; ++g) {
    hypers[space.name(g)] = space.constrain(g, truth.unconstrained[static_cast<std::size_t>(g)]);
  }
  nlohmann::json offsets;
  for (std::size_t d = 0; d < truth.panel.districts.size(); ++d) {
    offsets[truth.panel.districts[d].ags] = truth.offsets[d];
  }
  detail::write_json(nlohmann::json{{"seed", truth.seed},
                                    {"scenario", synth::scenario_name(truth.scenario)},
                                    {"hypers", hypers},
                                    {"offsets", offsets}},
                     cfg.out_dir + "/truth.json");
  return 0;
}

inline int cmd_sbc(const RunConfig& cfg) {
  detail::ensure_out_dir(cfg);
  synth::SbcConfig sbc = cfg.sbc;
  sbc.n_threads = cfg.workers();
  const synth::SbcResult result = synth::run_sbc(sbc);
  synth::save_sbc_ranks_csv(result, cfg.out_dir + "/sbc_ranks.csv");

  nlohmann::json per_hyper = nlohmann::json::array();
  for (std::size_t g = 0; g < result.hyper_names.size(); ++g) {
    per_hyper.push_back({{"name", result.hyper_names[g]},
                         {"chi2", result.chi2[g]},
                         {"uniform_ok", static_cast<bool>(result.uniform_ok[g])}});
  }
  detail::write_json(nlohmann::json{{"n_replicates", sbc.n_replicates},
                                    {"n_failures", result.n_failures},
                                    {"n_ranks", result.n_ranks},
                                    {"n_bins", result.n_bins},
                                    {"chi2_critical", result.chi2_critical},
                                    {"n_uniform_ok", result.n_uniform_ok()},
                                    {"hypers", per_hyper}},
                     cfg.out_dir + "/sbc_report.json");
  return 0;
}

/// Uncaught-error formatting: one JSON line on stderr, exit code 1.
inline int report_error(const Error& e) {
  nlohmann::json j{{"error", error_kind_name(e.kind())}, {"message", e.what()}};
  std::fprintf(stderr, "%s\n", j.dump().c_str());
  return 1;
}

}  // namespace mobi::cli

#endif  // MOBIDECOMP_CLI_HPP
