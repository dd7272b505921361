#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mobidecomp/synth.hpp"

using namespace mobi;
using Catch::Approx;

TEST_CASE("synthetic panel generation") {
  SECTION("same seed reproduces the panel bit-exactly") {
    const auto a = synth::simulate_panel(synth::default_hypers(), 3, 42,
                                         synth::IncidenceScenario::two_wave);
    const auto b = synth::simulate_panel(synth::default_hypers(), 3, 42,
                                         synth::IncidenceScenario::two_wave);
    CHECK(a.panel.duration == b.panel.duration);
    CHECK(a.panel.incidence_local == b.panel.incidence_local);
    CHECK(a.unconstrained == b.unconstrained);
    const auto c = synth::simulate_panel(synth::default_hypers(), 3, 43,
                                         synth::IncidenceScenario::two_wave);
    CHECK(a.panel.duration != c.panel.duration);
  }

  SECTION("zero scenario fluctuates around the baselines") {
    const auto truth =
        synth::simulate_panel(synth::default_hypers(), 4, 11, synth::IncidenceScenario::zero);
    const model::ParameterSpace space =
        model::ParameterSpace({"90001", "90002", "90003", "90004"});
    for (int d = 0; d < 4; ++d) {
      const auto p = model::district_params(space, truth.unconstrained, d);
      double mean = 0.0;
      // average over weeks without vacations/holidays and mild temperature effect
      int count = 0;
      for (int t = 1; t <= StudyCalendar::num_weeks; ++t) {
        const auto i = truth.panel.cell(d, t);
        if (truth.panel.vacation_days[i] > 0 || truth.panel.holiday_count[i] > 0) continue;
        mean += truth.panel.duration[i];
        ++count;
      }
      mean /= count;
      // Temperature still modulates, so allow a wide band around the baseline.
      CHECK(mean > 0.75 * p.d_base);
      CHECK(mean < 1.25 * p.d_base);
    }
  }

  SECTION("two-wave scenario depresses wave weeks (paired sign test)") {
    int wins = 0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
      const auto truth = synth::simulate_panel(synth::default_hypers(), 2, 1000 + rep,
                                               synth::IncidenceScenario::two_wave);
      // Wave weeks vs quiet summer weeks, matched count, no calendar effects.
      double wave = 0.0, quiet = 0.0;
      int n_wave = 0, n_quiet = 0;
      for (int d = 0; d < 2; ++d) {
        for (int t = 1; t <= StudyCalendar::num_weeks; ++t) {
          const auto i = truth.panel.cell(d, t);
          if (truth.panel.vacation_days[i] > 0 || truth.panel.holiday_count[i] > 0) continue;
          if ((t >= 4 && t <= 9) || (t >= 41 && t <= 47)) {
            wave += truth.panel.duration[i];
            ++n_wave;
          } else if (t >= 14 && t <= 18) {
            quiet += truth.panel.duration[i];
            ++n_quiet;
          }
        }
      }
      if (wave / n_wave < quiet / n_quiet) ++wins;
    }
    // Binomial(100, 1/2) two-sided: 66 wins has p < 0.01.
    CHECK(wins >= 66);
  }

  SECTION("durations are positive under default scales") {
    const auto truth = synth::simulate_panel(synth::default_hypers(), 5, 77,
                                             synth::IncidenceScenario::two_wave);
    for (double v : truth.panel.duration) CHECK(v > 0.0);
  }

  SECTION("district count validated") {
    CHECK_THROWS_MATCHES(synth::simulate_panel(synth::default_hypers(), 0, 1,
                                               synth::IncidenceScenario::flat),
                         Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::configuration_error;
                         }));
  }

  SECTION("scenario names round trip") {
    CHECK(synth::scenario_from_name("two_wave") == synth::IncidenceScenario::two_wave);
    CHECK_THROWS_AS(synth::scenario_from_name("bogus"), Error);
  }
}

TEST_CASE("prior-predictive baseline is centered near eight hours") {
  const model::ParameterSpace space({"90001", "90002", "90003", "90004", "90005"});
  std::mt19937_64 rng(123);
  std::vector<double> baselines;
  for (int rep = 0; rep < 400; ++rep) {
    const auto x = space.sample_prior(rng);
    for (int d = 0; d < 5; ++d) {
      baselines.push_back(model::district_params(space, x, d).d_base);
    }
  }
  const double med = median(baselines);
  CHECK(med > 7.0);
  CHECK(med < 9.0);
}

TEST_CASE("sbc internals") {
  SECTION("zero replicates rejected") {
    synth::SbcConfig cfg;
    cfg.n_replicates = 0;
    CHECK_THROWS_MATCHES(synth::run_sbc(cfg), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::configuration_error;
                         }));
  }

  SECTION("chi-square statistic separates uniform from skewed ranks") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> uniform_rank(0, 63);
    std::vector<int> uniform(400), skewed(400);
    for (auto& r : uniform) r = uniform_rank(rng);
    for (auto& r : skewed) r = std::min(63, uniform_rank(rng) / 3);
    const double crit = math::chi_squared_quantile(19, 0.99);
    CHECK(synth::detail::rank_chi2(uniform, 63, 20) < crit);
    CHECK(synth::detail::rank_chi2(skewed, 63, 20) > crit);
  }

  SECTION("uneven bin widths keep uniform data calibrated") {
    // All 64 rank values equally often: the statistic must be ~0 because the
    // expected counts follow the bin widths.
    std::vector<int> ranks;
    for (int v = 0; v <= 63; ++v) {
      for (int k = 0; k < 5; ++k) ranks.push_back(v);
    }
    CHECK(synth::detail::rank_chi2(ranks, 63, 20) == Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("sbc micro run completes and records ranks") {
  synth::SbcConfig cfg;
  cfg.n_replicates = 2;
  cfg.n_districts = 1;
  cfg.fit.n_chains = 2;
  cfg.fit.n_tune = 120;
  cfg.fit.n_draws = 80;
  cfg.n_threads = 2;
  cfg.seed = 3141;
  const auto result = synth::run_sbc(cfg);
  REQUIRE(result.hyper_names.size() == model::kNumGlobals);
  for (int g = 0; g < model::kNumGlobals; ++g) {
    for (int rank : result.ranks[static_cast<std::size_t>(g)]) {
      CHECK(rank >= 0);
      CHECK(rank <= cfg.n_ranks);
    }
  }
}
