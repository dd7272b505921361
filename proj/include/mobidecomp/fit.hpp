#ifndef MOBIDECOMP_FIT_HPP
#define MOBIDECOMP_FIT_HPP

#include <limits>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "mobidecomp/model.hpp"
#include "mobidecomp/nuts.hpp"

namespace mobi::model {

/// Sampler-facing gradient closure over the panel posterior. Evaluation
/// failures (overflow, non-finite intermediates) surface as -inf so the
/// sampler records a divergence instead of crashing.
inline sampler::GradFn make_posterior_grad_fn(const ParameterSpace& space,
                                              const ModelData& data) {
  auto eval = std::make_shared<PosteriorGradient>(space, data);
  return [eval](std::span<const double> x, std::span<double> grad) -> double {
    try {
      return (*eval)(x, grad);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::evaluation_error) throw;
      std::fill(grad.begin(), grad.end(), 0.0);
      return -std::numeric_limits<double>::infinity();
    }
  };
}

/// Full inference protocol on a prepared panel: per-chain RNG streams,
/// prior-draw initialization with a small unconstrained jitter, warmup, and
/// post-warmup draws.
inline sampler::FitResult fit_panel(const sampler::ChainConfig& cfg, const ParameterSpace& space,
                                    const ModelData& data, int n_threads) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(space.dim()));
  for (int i = 0; i < space.dim(); ++i) names.push_back(space.name(i));

  auto make_grad = [&space, &data](int) { return make_posterior_grad_fn(space, data); };
  auto make_init = [&space](std::mt19937_64& rng) {
    std::vector<double> x = space.sample_prior(rng);
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (double& xi : x) xi += jitter(rng);
    return x;
  };
  return sampler::run_chains(cfg, space.dim(), make_grad, make_init, names, n_threads);
}

}  // namespace mobi::model

#endif  // MOBIDECOMP_FIT_HPP
