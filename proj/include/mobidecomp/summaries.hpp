#ifndef MOBIDECOMP_SUMMARIES_HPP
#define MOBIDECOMP_SUMMARIES_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mobidecomp/common.hpp"
#include "mobidecomp/csv.hpp"
#include "mobidecomp/draws.hpp"
#include "mobidecomp/model.hpp"

namespace mobi::post {

enum class Factor { disease, temperature, vacation, holiday };

inline char factor_code(Factor f) {
  switch (f) {
    case Factor::disease: return 'C';
    case Factor::temperature: return 'W';
    case Factor::vacation: return 'V';
    case Factor::holiday: return 'H';
  }
  return '?';
}

/// Wave windows over the study weeks, with the continuous bounds used for
/// the decay integral: first 13 weeks and final 26 weeks of the window.
struct WaveWindow {
  std::string label;
  int week_lo = 1;
  int week_hi = 1;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

inline WaveWindow first_wave() { return {"first", 1, 13, 0.0, 13.0}; }
inline WaveWindow second_wave() { return {"second", 27, 52, 26.0, 52.0}; }

struct QuantileBand {
  double q025 = 0.0, q50 = 0.0, q975 = 0.0;
};

struct Summary {
  double median = 0.0, q25 = 0.0, q75 = 0.0;
};

inline Summary summarize_quartiles(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return Summary{quantile_sorted(values, 0.5), quantile_sorted(values, 0.25),
                 quantile_sorted(values, 0.75)};
}

namespace detail {

/// Maps space indices to draw columns by name; the draws file may come from
/// an earlier process.
inline std::vector<int> param_map(const sampler::PosteriorDraws& draws,
                                  const model::ParameterSpace& space) {
  std::map<std::string, int> by_name;
  for (int p = 0; p < draws.n_params(); ++p) {
    by_name[draws.param_names[static_cast<std::size_t>(p)]] = p;
  }
  std::vector<int> map(static_cast<std::size_t>(space.dim()));
  for (int i = 0; i < space.dim(); ++i) {
    const auto it = by_name.find(space.name(i));
    if (it == by_name.end()) {
      fail(ErrorKind::validation_error, "draws are missing parameter '" + space.name(i) + "'");
    }
    map[static_cast<std::size_t>(i)] = it->second;
  }
  return map;
}

inline std::vector<double> reorder(std::span<const double> draw, const std::vector<int>& map) {
  std::vector<double> x(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    x[i] = draw[static_cast<std::size_t>(map[i])];
  }
  return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reaction strength: the integral of the decay amplitude kappa e^(-t/lambda)
// over a wave window.
// ---------------------------------------------------------------------------

/// Closed form of the integral over [t_lo, t_hi]; exact in the flat-decay
/// limit lambda = infinity where it degenerates to kappa * window width.
inline double reaction_strength_value(double kappa, double lambda, double t_lo, double t_hi) {
  if (!(kappa >= 0.0) || !(lambda > 0.0) || !(t_hi >= t_lo)) {
    fail(ErrorKind::domain_error, "reaction strength needs kappa >= 0, lambda > 0, ordered bounds");
  }
  if (std::isinf(lambda)) return kappa * (t_hi - t_lo);
  return kappa * lambda * std::exp(-t_lo / lambda) * (-std::expm1(-(t_hi - t_lo) / lambda));
}

/// Per-draw reaction strength of one district, summarized by median and
/// quartiles.
inline Summary reaction_strength(const sampler::PosteriorDraws& draws,
                                 const model::ParameterSpace& space, int district,
                                 const WaveWindow& window) {
  const auto map = detail::param_map(draws, space);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(draws.n_total()));
  for (int k = 0; k < draws.n_total(); ++k) {
    const auto x = detail::reorder(draws.flat_draw(k), map);
    const model::DistrictParams p = model::district_params(space, x, district);
    values.push_back(reaction_strength_value(p.kappa, p.lambda, window.t_lo, window.t_hi));
  }
  return summarize_quartiles(std::move(values));
}

// ---------------------------------------------------------------------------
// Factor trajectories with credible bands.
// ---------------------------------------------------------------------------

struct FactorTrajectory {
  std::vector<std::string> district_keys;
  int n_weeks = 0;

  const QuantileBand& at(int district, int week, Factor f) const {
    return bands[index(district, week, f)];
  }

  std::vector<QuantileBand> bands;  // [district][week-1][factor]

  std::size_t index(int district, int week, Factor f) const {
    return (static_cast<std::size_t>(district) * static_cast<std::size_t>(n_weeks) +
            static_cast<std::size_t>(week - 1)) *
               4 +
           static_cast<std::size_t>(f);
  }
};

/// Pointwise 2.5/50/97.5 percentiles of each factor's multiplicative impact,
/// evaluated per posterior draw.
inline FactorTrajectory factor_trajectories(const sampler::PosteriorDraws& draws,
                                            const model::ParameterSpace& space,
                                            const model::ModelData& data) {
  if (draws.n_total() < 1) fail(ErrorKind::validation_error, "empty draws");
  const auto map = detail::param_map(draws, space);
  const int n_total = draws.n_total();
  const int n_weeks = data.n_weeks;

  FactorTrajectory traj;
  traj.district_keys = space.district_keys();
  traj.n_weeks = n_weeks;
  traj.bands.resize(static_cast<std::size_t>(space.n_districts()) *
                    static_cast<std::size_t>(n_weeks) * 4);

  // per-factor draw values for one district: [week][draw]
  std::vector<std::vector<double>> values(static_cast<std::size_t>(n_weeks) * 4,
                                          std::vector<double>(static_cast<std::size_t>(n_total)));
  for (int d = 0; d < space.n_districts(); ++d) {
    for (int k = 0; k < n_total; ++k) {
      const auto x = detail::reorder(draws.flat_draw(k), map);
      const model::GlobalHypers h = model::constrain_globals(space, x);
      const model::DistrictParams p = model::district_params(space, x, d);
      const auto weights =
          model::gamma_kernel_weights<double>(p.mu_g, h.alpha_c_g, model::kKernelLag);
      const auto signal =
          model::disease_signal<double>(data.local_of(d), data.n_national, p.omega, weights);
      for (int t = 1; t <= n_weeks; ++t) {
        const std::size_t cell = data.cell(d, t);
        const std::size_t row = static_cast<std::size_t>(t - 1) * 4;
        values[row + 0][static_cast<std::size_t>(k)] = model::disease_factor<double>(
            signal[static_cast<std::size_t>(t - 1)], p.kappa, p.lambda, t);
        values[row + 1][static_cast<std::size_t>(k)] =
            model::temperature_factor<double>(data.tmax[cell], p.phi_w, p.psi_w, p.chi_w);
        values[row + 2][static_cast<std::size_t>(k)] =
            model::vacation_factor<double>(data.vacation_days[cell], p.theta_v);
        values[row + 3][static_cast<std::size_t>(k)] =
            model::holiday_factor<double>(data.holiday_count[cell], p.theta_h);
      }
    }
    for (int t = 1; t <= n_weeks; ++t) {
      for (int f = 0; f < 4; ++f) {
        auto& v = values[static_cast<std::size_t>(t - 1) * 4 + static_cast<std::size_t>(f)];
        std::sort(v.begin(), v.end());
        QuantileBand band{quantile_sorted(v, 0.025), quantile_sorted(v, 0.5),
                          quantile_sorted(v, 0.975)};
        traj.bands[traj.index(d, t, static_cast<Factor>(f))] = band;
      }
    }
  }
  return traj;
}

/// Distribution across districts of the per-district median impact of one
/// factor in one week: median plus the 25th-75th percentile spread.
inline Summary cross_district_impact(const FactorTrajectory& traj, int week, Factor f) {
  if (week < 1 || week > traj.n_weeks) {
    fail(ErrorKind::range_error, "week " + std::to_string(week) + " outside trajectory range");
  }
  std::vector<double> medians;
  medians.reserve(traj.district_keys.size());
  for (std::size_t d = 0; d < traj.district_keys.size(); ++d) {
    medians.push_back(traj.at(static_cast<int>(d), week, f).q50);
  }
  return summarize_quartiles(std::move(medians));
}

// ---------------------------------------------------------------------------
// Scalar per-district posterior summaries.
// ---------------------------------------------------------------------------

namespace detail {

template <class Extract>
std::vector<Summary> per_district_summary(const sampler::PosteriorDraws& draws,
                                          const model::ParameterSpace& space, Extract extract) {
  if (draws.n_total() < 1) fail(ErrorKind::validation_error, "empty draws");
  const auto map = param_map(draws, space);
  std::vector<Summary> out;
  out.reserve(static_cast<std::size_t>(space.n_districts()));
  std::vector<double> values(static_cast<std::size_t>(draws.n_total()));
  for (int d = 0; d < space.n_districts(); ++d) {
    for (int k = 0; k < draws.n_total(); ++k) {
      const auto x = reorder(draws.flat_draw(k), map);
      values[static_cast<std::size_t>(k)] = extract(x, d);
    }
    out.push_back(summarize_quartiles(values));
  }
  return out;
}

}  // namespace detail

/// Posterior summaries of the local-incidence weight omega, per district.
inline std::vector<Summary> local_weight_summary(const sampler::PosteriorDraws& draws,
                                                 const model::ParameterSpace& space) {
  return detail::per_district_summary(draws, space, [&](const std::vector<double>& x, int d) {
    return model::district_params(space, x, d).omega;
  });
}

/// Posterior summaries of the fatigue decay constant lambda, per district.
inline std::vector<Summary> fatigue_summary(const sampler::PosteriorDraws& draws,
                                            const model::ParameterSpace& space) {
  return detail::per_district_summary(draws, space, [&](const std::vector<double>& x, int d) {
    return model::district_params(space, x, d).lambda;
  });
}

/// Per-draw reaction strengths for every district at once (one pass over the
/// draws instead of one per district).
inline std::vector<Summary> reaction_strength_all(const sampler::PosteriorDraws& draws,
                                                  const model::ParameterSpace& space,
                                                  const WaveWindow& window) {
  return detail::per_district_summary(draws, space, [&](const std::vector<double>& x, int d) {
    const model::DistrictParams p = model::district_params(space, x, d);
    return reaction_strength_value(p.kappa, p.lambda, window.t_lo, window.t_hi);
  });
}

// ---------------------------------------------------------------------------
// CSV emitters.
// ---------------------------------------------------------------------------

inline void save_trajectories_csv(const FactorTrajectory& traj, const std::string& path) {
  CsvWriter w(path);
  w.row({"district", "week", "factor", "q025", "q50", "q975"});
  for (std::size_t d = 0; d < traj.district_keys.size(); ++d) {
    for (int t = 1; t <= traj.n_weeks; ++t) {
      for (Factor f : {Factor::disease, Factor::temperature, Factor::vacation, Factor::holiday}) {
        const QuantileBand& b = traj.at(static_cast<int>(d), t, f);
        w.row({traj.district_keys[d], std::to_string(t), std::string(1, factor_code(f)),
               CsvWriter::num(b.q025), CsvWriter::num(b.q50), CsvWriter::num(b.q975)});
      }
    }
  }
  w.close();
}

inline void save_reaction_strength_csv(const std::vector<std::string>& districts,
                                       const std::vector<Summary>& first,
                                       const std::vector<Summary>& second,
                                       const std::string& path) {
  CsvWriter w(path);
  w.row({"district", "wave", "median", "q25", "q75"});
  for (std::size_t d = 0; d < districts.size(); ++d) {
    w.row({districts[d], "first", CsvWriter::num(first[d].median), CsvWriter::num(first[d].q25),
           CsvWriter::num(first[d].q75)});
  }
  for (std::size_t d = 0; d < districts.size(); ++d) {
    w.row({districts[d], "second", CsvWriter::num(second[d].median),
           CsvWriter::num(second[d].q25), CsvWriter::num(second[d].q75)});
  }
  w.close();
}

inline void save_scalar_summary_csv(const std::vector<std::string>& districts,
                                    const std::vector<Summary>& summaries,
                                    const std::string& column, const std::string& path) {
  CsvWriter w(path);
  w.row({"district", column + "_median", column + "_q25", column + "_q75"});
  for (std::size_t d = 0; d < districts.size(); ++d) {
    w.row({districts[d], CsvWriter::num(summaries[d].median), CsvWriter::num(summaries[d].q25),
           CsvWriter::num(summaries[d].q75)});
  }
  w.close();
}

inline std::vector<Summary> load_reaction_strength_csv(const std::string& path,
                                                       const std::vector<std::string>& districts,
                                                       const std::string& wave) {
  const CsvTable t = read_csv(path);
  const int c_d = t.column("district");
  const int c_w = t.column("wave");
  const int c_med = t.column("median");
  const int c_q25 = t.column("q25");
  const int c_q75 = t.column("q75");
  std::map<std::string, Summary> by_district;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][static_cast<std::size_t>(c_w)] != wave) continue;
    by_district[t.rows[r][static_cast<std::size_t>(c_d)]] =
        Summary{parse_double(t, r, c_med), parse_double(t, r, c_q25), parse_double(t, r, c_q75)};
  }
  std::vector<Summary> out;
  for (const auto& d : districts) {
    const auto it = by_district.find(d);
    if (it == by_district.end()) {
      fail(ErrorKind::missing_prerequisite, path + ": no '" + wave + "' row for district " + d);
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace mobi::post

#endif  // MOBIDECOMP_SUMMARIES_HPP
