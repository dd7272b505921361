#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "mobidecomp/diagnostics.hpp"
#include "mobidecomp/fit.hpp"
#include "mobidecomp/nuts.hpp"
#include "mobidecomp/synth.hpp"

using namespace mobi;
using Catch::Approx;

namespace {

sampler::GradFn std_normal_target(int dim) {
  return [dim](std::span<const double> x, std::span<double> g) {
    double lp = 0.0;
    for (int i = 0; i < dim; ++i) {
      lp -= 0.5 * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
      g[static_cast<std::size_t>(i)] = -x[static_cast<std::size_t>(i)];
    }
    return lp;
  };
}

/// Bivariate normal, correlation rho, unit variances.
sampler::GradFn correlated_target(double rho) {
  return [rho](std::span<const double> x, std::span<double> g) {
    const double c = 1.0 / (1.0 - rho * rho);
    g[0] = -c * (x[0] - rho * x[1]);
    g[1] = -c * (x[1] - rho * x[0]);
    return -0.5 * c * (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]);
  };
}

std::vector<double> run_single_chain(const sampler::GradFn& target, int dim, int n_tune,
                                     int n_draws, std::uint64_t seed,
                                     std::vector<std::vector<double>>* all_draws = nullptr,
                                     std::vector<sampler::IterStats>* all_stats = nullptr) {
  sampler::ChainConfig cfg;
  cfg.n_chains = 1;
  cfg.n_tune = n_tune;
  cfg.n_draws = n_draws;
  cfg.seed = seed;
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::vector<double> init(static_cast<std::size_t>(dim), 0.1);
  auto w = sampler::warmup(cfg, target, init, rng);
  sampler::PhasePoint z = w.state;
  std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < n_draws; ++i) {
    const auto st = sampler::nuts_draw(z, target, w.step_size, w.inv_mass, cfg.max_tree_depth, rng);
    if (all_draws) all_draws->push_back(z.q);
    if (all_stats) all_stats->push_back(st);
    for (int d = 0; d < dim; ++d) mean[static_cast<std::size_t>(d)] += z.q[static_cast<std::size_t>(d)];
  }
  for (auto& m : mean) m /= n_draws;
  return mean;
}

}  // namespace

TEST_CASE("leapfrog") {
  SECTION("fixed point at zero momentum and zero gradient") {
    auto flat = [](std::span<const double> x, std::span<double> g) {
      std::fill(g.begin(), g.end(), 0.0);
      (void)x;
      return 0.0;
    };
    sampler::PhasePoint z;
    z.q = {1.0, -2.0};
    z.p = {0.0, 0.0};
    z.grad = {0.0, 0.0};
    z.logp = 0.0;
    std::vector<double> inv_mass = {1.0, 1.0};
    REQUIRE(sampler::leapfrog(z, 0.3, inv_mass, flat));
    CHECK(z.q[0] == 1.0);
    CHECK(z.q[1] == -2.0);
  }

  SECTION("harmonic oscillator trajectory accurate to O(eps^2)") {
    auto target = std_normal_target(1);
    const double eps = 0.01;
    sampler::PhasePoint z;
    z.q = {1.0};
    z.p = {0.0};
    z.grad = {-1.0};
    z.logp = -0.5;
    std::vector<double> inv_mass = {1.0};
    // One full period of q(t) = cos(t).
    const int steps = static_cast<int>(2.0 * 3.14159265358979 / eps);
    for (int s = 0; s < steps; ++s) REQUIRE(sampler::leapfrog(z, eps, inv_mass, target));
    const double t = steps * eps;
    CHECK(z.q[0] == Approx(std::cos(t)).margin(50 * eps * eps));
    CHECK(z.p[0] == Approx(-std::sin(t)).margin(50 * eps * eps));
  }

  SECTION("exact reversibility on random states") {
    auto target = correlated_target(0.7);
    std::mt19937_64 rng(44);
    std::normal_distribution<double> nd;
    std::vector<double> inv_mass = {0.8, 1.3};
    for (int rep = 0; rep < 20; ++rep) {
      sampler::PhasePoint z;
      z.q = {nd(rng), nd(rng)};
      z.p = {nd(rng), nd(rng)};
      z.grad.assign(2, 0.0);
      z.logp = target(z.q, z.grad);
      const auto start = z;
      for (int s = 0; s < 8; ++s) REQUIRE(sampler::leapfrog(z, 0.2, inv_mass, target));
      z.p[0] = -z.p[0];
      z.p[1] = -z.p[1];
      for (int s = 0; s < 8; ++s) REQUIRE(sampler::leapfrog(z, 0.2, inv_mass, target));
      CHECK(std::fabs(z.q[0] - start.q[0]) < 1e-10);
      CHECK(std::fabs(z.q[1] - start.q[1]) < 1e-10);
      CHECK(std::fabs(z.p[0] + start.p[0]) < 1e-10);
      CHECK(std::fabs(z.p[1] + start.p[1]) < 1e-10);
    }
  }
}

TEST_CASE("nuts transitions") {
  SECTION("1-D standard normal moments") {
    std::vector<std::vector<double>> draws;
    run_single_chain(std_normal_target(1), 1, 500, 4000, 321, &draws);
    double mean = 0.0, var = 0.0;
    for (const auto& d : draws) mean += d[0];
    mean /= draws.size();
    for (const auto& d : draws) var += (d[0] - mean) * (d[0] - mean);
    var /= (draws.size() - 1);
    CHECK(std::fabs(mean) < 0.05);
    CHECK(var > 0.9);
    CHECK(var < 1.1);
  }

  SECTION("2-D correlated normal recovers the correlation") {
    std::vector<std::vector<double>> draws;
    run_single_chain(correlated_target(0.9), 2, 600, 4000, 99, &draws);
    double m0 = 0, m1 = 0;
    for (const auto& d : draws) {
      m0 += d[0];
      m1 += d[1];
    }
    m0 /= draws.size();
    m1 /= draws.size();
    double c00 = 0, c11 = 0, c01 = 0;
    for (const auto& d : draws) {
      c00 += (d[0] - m0) * (d[0] - m0);
      c11 += (d[1] - m1) * (d[1] - m1);
      c01 += (d[0] - m0) * (d[1] - m1);
    }
    const double corr = c01 / std::sqrt(c00 * c11);
    CHECK(corr == Approx(0.9).margin(0.05));
  }

  SECTION("depth cap zero degenerates to one accept/reject step") {
    auto target = std_normal_target(1);
    std::mt19937_64 rng(5);
    sampler::PhasePoint z;
    z.q = {0.4};
    z.p = {0.0};
    z.grad = {-0.4};
    z.logp = -0.08;
    std::vector<double> inv_mass = {1.0};
    for (int i = 0; i < 50; ++i) {
      const auto st = sampler::nuts_draw(z, target, 0.5, inv_mass, 0, rng);
      CHECK(st.n_leapfrog == 1);
      CHECK(st.tree_depth <= 1);
      CHECK(std::isfinite(z.q[0]));
    }
  }
}

TEST_CASE("warmup adaptation") {
  SECTION("acceptance statistic lands near the 0.8 target") {
    std::vector<sampler::IterStats> stats;
    run_single_chain(std_normal_target(3), 3, 800, 1000, 17, nullptr, &stats);
    double mean_accept = 0.0;
    for (const auto& s : stats) mean_accept += s.accept_stat;
    mean_accept /= stats.size();
    CHECK(mean_accept > 0.7);
    CHECK(mean_accept < 0.9);
  }

  SECTION("metric recovers a 1:100 variance split within 3x") {
    auto target = [](std::span<const double> x, std::span<double> g) {
      g[0] = -x[0];
      g[1] = -x[1] / 100.0;
      return -0.5 * (x[0] * x[0] + x[1] * x[1] / 100.0);
    };
    sampler::ChainConfig cfg;
    cfg.n_chains = 1;
    cfg.n_tune = 1000;
    std::mt19937_64 rng(8);
    auto w = sampler::warmup(cfg, target, {0.5, 0.5}, rng);
    const double ratio = w.inv_mass[1] / w.inv_mass[0];
    CHECK(ratio > 100.0 / 3.0);
    CHECK(ratio < 300.0);
  }

  SECTION("n_tune below minimum is a configuration error") {
    sampler::ChainConfig cfg;
    cfg.n_tune = 50;
    std::mt19937_64 rng(1);
    CHECK_THROWS_MATCHES(sampler::warmup(cfg, std_normal_target(1), {0.0}, rng), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::configuration_error;
                         }));
  }
}

TEST_CASE("split rhat") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  SECTION("iid chains sit near one") {
    std::vector<std::vector<double>> chains(4, std::vector<double>(1000));
    for (auto& c : chains) {
      for (auto& v : c) v = nd(rng);
    }
    const double r = sampler::split_rhat(chains);
    CHECK(r > 0.99);
    CHECK(r < 1.02);
  }
  SECTION("separated chains blow past two") {
    std::vector<std::vector<double>> chains(2, std::vector<double>(500));
    for (auto& v : chains[0]) v = nd(rng);
    for (auto& v : chains[1]) v = 5.0 + nd(rng);
    CHECK(sampler::split_rhat(chains) > 2.0);
  }
  SECTION("constant chains are undefined") {
    std::vector<std::vector<double>> chains(2, std::vector<double>(100, 3.0));
    CHECK_THROWS_MATCHES(sampler::split_rhat(chains), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.kind() == ErrorKind::undefined_diagnostic;
                         }));
  }
  SECTION("diagnostics are invariant to chain order") {
    std::vector<std::vector<double>> chains(4, std::vector<double>(300));
    for (std::size_t c = 0; c < 4; ++c) {
      double prev = nd(rng);
      for (auto& v : chains[c]) {
        prev = 0.5 * prev + nd(rng);
        v = prev;
      }
    }
    auto permuted = chains;
    std::swap(permuted[0], permuted[3]);
    std::swap(permuted[1], permuted[2]);
    CHECK(sampler::split_rhat(chains) == Approx(sampler::split_rhat(permuted)).epsilon(1e-14));
    CHECK(sampler::effective_sample_size(chains) ==
          Approx(sampler::effective_sample_size(permuted)).epsilon(1e-14));
  }
}

TEST_CASE("effective sample size") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> nd;
  SECTION("iid draws give ESS near N") {
    std::vector<std::vector<double>> chains(4, std::vector<double>(1000));
    for (auto& c : chains) {
      for (auto& v : c) v = nd(rng);
    }
    const double ess = sampler::effective_sample_size(chains);
    CHECK(ess / 4000.0 > 0.8);
    CHECK(ess / 4000.0 < 1.2);
  }
  SECTION("AR(1) draws match the analytic efficiency within 2x") {
    const double rho = 0.9;
    std::vector<std::vector<double>> chains(2, std::vector<double>(20000));
    for (auto& c : chains) {
      double prev = nd(rng);
      for (auto& v : c) {
        prev = rho * prev + std::sqrt(1 - rho * rho) * nd(rng);
        v = prev;
      }
    }
    const double ess = sampler::effective_sample_size(chains);
    const double expected = (1.0 - rho) / (1.0 + rho);  // ~0.0526
    const double ratio = ess / 40000.0;
    CHECK(ratio > expected / 2.0);
    CHECK(ratio < expected * 2.0);
  }
  SECTION("single constant chain is an error") {
    std::vector<std::vector<double>> chains(1, std::vector<double>(100, 1.0));
    CHECK_THROWS_AS(sampler::effective_sample_size(chains), Error);
  }
}

TEST_CASE("multi-chain runs") {
  auto make_target = [](int) { return std_normal_target(2); };
  auto make_init = [](std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    return std::vector<double>{nd(rng), nd(rng)};
  };
  sampler::ChainConfig cfg;
  cfg.n_chains = 4;
  cfg.n_tune = 300;
  cfg.n_draws = 200;
  cfg.seed = 777;

  SECTION("identical seeds give bit-identical draws at any worker count") {
    const auto a = sampler::run_chains(cfg, 2, make_target, make_init, {"x0", "x1"}, 1);
    const auto b = sampler::run_chains(cfg, 2, make_target, make_init, {"x0", "x1"}, 2);
    const auto c = sampler::run_chains(cfg, 2, make_target, make_init, {"x0", "x1"}, 4);
    CHECK(a.draws.values == b.draws.values);
    CHECK(a.draws.values == c.draws.values);
    CHECK(a.step_size == b.step_size);
  }

  SECTION("diagnostics flag healthy runs as converged") {
    const auto res = sampler::run_chains(cfg, 2, make_target, make_init, {"x0", "x1"}, 2);
    const auto report = sampler::diagnose(res.draws);
    CHECK(report.rhat_max < 1.07);
    CHECK(report.all_converged_gate());
  }

  SECTION("wildly mis-scaled target fails loudly or stays finite") {
    // Density that overflows away from a narrow region: the guard converts
    // evaluation failures into -inf, so the run either completes with finite
    // draws or reports adaptation failure; silent NaN is the only wrong answer.
    auto nasty = [](int) {
      return sampler::GradFn([](std::span<const double> x, std::span<double> g) {
        const double v = x[0] * 1e6;
        g[0] = -v * 1e6;
        const double lp = -0.5 * v * v;
        if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
        return lp;
      });
    };
    sampler::ChainConfig small = cfg;
    small.n_chains = 1;
    small.n_tune = 150;
    small.n_draws = 50;
    auto make_init_1d = [](std::mt19937_64& rng) {
      std::normal_distribution<double> nd;
      return std::vector<double>{nd(rng)};
    };
    try {
      const auto res = sampler::run_chains(small, 1, nasty, make_init_1d, {"x0"}, 1);
      for (double v : res.draws.values) CHECK(std::isfinite(v));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::adaptation_failure);
    }
  }
}

TEST_CASE("panel fit smoke run") {
  const auto truth = synth::simulate_panel(synth::default_hypers(), 2, 31,
                                           synth::IncidenceScenario::two_wave);
  const auto data = model::ModelData::prepare(truth.panel);
  std::vector<std::string> keys;
  for (const auto& d : truth.panel.districts) keys.push_back(d.ags);
  const model::ParameterSpace space(keys);

  sampler::ChainConfig cfg;
  cfg.n_chains = 2;
  cfg.n_tune = 150;
  cfg.n_draws = 60;
  cfg.seed = 5;
  const auto res = model::fit_panel(cfg, space, data, 2);
  CHECK(res.draws.n_chains == 2);
  CHECK(res.draws.n_iters == 60);
  for (double v : res.draws.values) CHECK(std::isfinite(v));

  SECTION("draw round trip through csv") {
    const auto dir = std::filesystem::temp_directory_path() / "mobidecomp_draws_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "draws.csv").string();
    sampler::save_draws_csv(res.draws, path);
    const auto loaded = sampler::load_draws_csv(path);
    CHECK(loaded.values == res.draws.values);
    CHECK(loaded.param_names == res.draws.param_names);
  }
}
