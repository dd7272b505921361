#ifndef MOBIDECOMP_MODEL_HPP
#define MOBIDECOMP_MODEL_HPP

#include <cmath>
#include <span>
#include <vector>

#include "mobidecomp/ad.hpp"
#include "mobidecomp/common.hpp"
#include "mobidecomp/ingest.hpp"
#include "mobidecomp/panel.hpp"
#include "mobidecomp/params.hpp"
#include "mobidecomp/special.hpp"

namespace mobi::model {

/// Memory kernel truncation in weeks. At prior-typical kernel parameters
/// (mean ~3, shape ~3) lags beyond 10 weeks carry < 0.1% of the mass; the
/// weights are renormalized after truncation.
constexpr int kKernelLag = 10;

constexpr double kHalfLog2Pi = 0.91893853320467274;  // 0.5 ln(2 pi)

// ---------------------------------------------------------------------------
// Factor submodels, templated over the scalar type so the same expressions
// run on plain doubles and on the reverse-mode tape.
// ---------------------------------------------------------------------------

/// Baseline hours/day: 8 * exp(mu + z * sigma).
template <class S>
S baseline_duration(const S& mu_base, const S& z_base, const S& sigma_base) {
  using std::exp;
  return exp(mu_base + z_base * sigma_base) * 8.0;
}

/// Sigmoid temperature response, equal to 1 at tmax = psi and saturating at
/// 1 +/- phi/2.
template <class S>
S temperature_factor(double tmax, const S& phi, const S& psi, const S& chi) {
  using ad::logistic;
  using math::logistic;
  return phi * logistic((tmax - psi) / chi) + (1.0 - phi * 0.5);
}

namespace detail {
inline void check_weekday_count(int value, const char* what) {
  if (value < 0 || value > 5) {
    fail(ErrorKind::domain_error,
         std::string(what) + " " + std::to_string(value) + " outside 0..5");
  }
}
}  // namespace detail

/// (theta - 1)/7 * days + 1; only the five potential school days are affected.
template <class S>
S vacation_factor(int days, const S& theta_v) {
  detail::check_weekday_count(days, "vacation days");
  return (theta_v - 1.0) * (static_cast<double>(days) / 7.0) + 1.0;
}

/// (theta - 1)/7 * count + 1; same shape as the vacation factor.
template <class S>
S holiday_factor(int count, const S& theta_h) {
  detail::check_weekday_count(count, "holiday count");
  return (theta_h - 1.0) * (static_cast<double>(count) / 7.0) + 1.0;
}

/// Gamma memory weights: bin-integrated mass on [k, k+1) for shape alpha and
/// rate alpha/mu (so the kernel mean is mu), renormalized to sum to 1 over
/// lags 0..L.
template <class S>
std::vector<S> gamma_kernel_weights(const S& mu_g, const S& alpha, int lag) {
  using ad::gamma_p;
  using math::gamma_p;
  if (!(ad::value_of(mu_g) > 0.0) || !(ad::value_of(alpha) > 0.0) || lag < 1) {
    fail(ErrorKind::domain_error, "gamma kernel requires mu > 0, alpha > 0, lag >= 1");
  }
  const S rate = alpha / mu_g;
  std::vector<S> w;
  w.reserve(static_cast<std::size_t>(lag) + 1);
  S prev = gamma_p(alpha, rate);  // CDF at 1
  w.push_back(prev);
  for (int k = 1; k <= lag; ++k) {
    S cur = gamma_p(alpha, rate * static_cast<double>(k + 1));
    w.push_back(cur - prev);
    prev = cur;
  }
  S total = w[0];
  for (int k = 1; k <= lag; ++k) total += w[static_cast<std::size_t>(k)];
  for (auto& wk : w) wk = wk / total;
  return w;
}

/// Causal convolution of the omega-weighted incidence mix with the kernel;
/// weeks before the window count as zero incidence.
template <class S>
std::vector<S> disease_signal(std::span<const double> n_local, std::span<const double> n_national,
                              const S& omega, std::span<const S> weights) {
  const int n_weeks = static_cast<int>(n_local.size());
  const int lag = static_cast<int>(weights.size()) - 1;
  std::vector<S> mixed;
  mixed.reserve(static_cast<std::size_t>(n_weeks));
  for (int t = 0; t < n_weeks; ++t) {
    mixed.push_back(omega * (n_local[static_cast<std::size_t>(t)] -
                             n_national[static_cast<std::size_t>(t)]) +
                    n_national[static_cast<std::size_t>(t)]);
  }
  std::vector<S> signal;
  signal.reserve(static_cast<std::size_t>(n_weeks));
  for (int t = 0; t < n_weeks; ++t) {
    S acc = weights[0] * mixed[static_cast<std::size_t>(t)];
    for (int k = 1; k <= lag && k <= t; ++k) {
      acc += weights[static_cast<std::size_t>(k)] * mixed[static_cast<std::size_t>(t - k)];
    }
    signal.push_back(acc);
  }
  return signal;
}

/// exp(-kappa e^(-t/lambda) s): the response to the convolved signal, with
/// the amplitude discounted by the elapsed study weeks (pandemic fatigue).
template <class S>
S disease_factor(const S& signal, const S& kappa, const S& lambda, int week) {
  using std::exp;
  return exp(-(kappa * exp(-(static_cast<double>(week) / lambda)) * signal));
}

// ---------------------------------------------------------------------------
// Hierarchical parameterization.
// ---------------------------------------------------------------------------

template <class S>
struct HypersT {
  S mu_base, sigma_base;
  S mu_w_phi, sigma_w_phi, mu_w_psi, sigma_w_psi, mu_w_chi, sigma_w_chi;
  S mu_v, sigma_v, mu_h, sigma_h;
  S mu_c_phi, sigma_c_phi, mu_c_psi, sigma_c_psi, mu_c_omega;
  S mu_c_g, sigma_c_g, alpha_c_g;
  S sigma_l;
};

using GlobalHypers = HypersT<double>;

template <class S>
struct DistrictParamsT {
  S d_base;            // hours/day
  S phi_w, psi_w, chi_w;
  S theta_v, theta_h;
  S kappa, lambda, omega, mu_g;
};

struct DistrictParams : DistrictParamsT<double> {
  double sigma_g = 0.0;  // mu_g / sqrt(alpha)
};

namespace detail {

template <class S>
S constrain_scalar(const ParamDef& def, const S& u) {
  using ad::logistic;
  using math::logistic;
  using std::exp;
  switch (def.transform) {
    case Transform::identity: return u;
    case Transform::log_positive: return exp(u);
    case Transform::scaled_logit: return def.lo + (def.hi - def.lo) * logistic(u);
  }
  return u;
}

}  // namespace detail

template <class S>
HypersT<S> constrain_hypers(const ParameterSpace& space, std::span<const S> x) {
  auto g = [&](GlobalIndex i) {
    return detail::constrain_scalar(space.def(ParameterSpace::global(i)),
                                    x[static_cast<std::size_t>(ParameterSpace::global(i))]);
  };
  HypersT<S> h{g(kMuBase),  g(kSigmaBase), g(kMuWPhi),  g(kSigmaWPhi), g(kMuWPsi),
               g(kSigmaWPsi), g(kMuWChi),  g(kSigmaWChi), g(kMuV),     g(kSigmaV),
               g(kMuH),     g(kSigmaH),  g(kMuCPhi),  g(kSigmaCPhi), g(kMuCPsi),
               g(kSigmaCPsi), g(kMuCOmega), g(kMuCG),  g(kSigmaCG),  g(kAlphaCG),
               g(kSigmaL)};
  return h;
}

inline GlobalHypers constrain_globals(const ParameterSpace& space, std::span<const double> x) {
  return constrain_hypers<double>(space, x);
}

/// District parameters from the non-centered offsets: every district value is
/// global location + global scale * standardized offset, mapped to its
/// support.
template <class S>
DistrictParamsT<S> district_params_eval(const ParameterSpace& space, const HypersT<S>& h,
                                        std::span<const S> x, int district) {
  using ad::logistic;
  using ad::softplus;
  using math::logistic;
  using math::softplus;
  auto z = [&](OffsetIndex o) {
    return x[static_cast<std::size_t>(space.offset(district, o))];
  };
  DistrictParamsT<S> p{
      baseline_duration(h.mu_base, z(kZBase), h.sigma_base),
      h.mu_w_phi + h.sigma_w_phi * z(kZWPhi),
      h.mu_w_psi + h.sigma_w_psi * z(kZWPsi),
      [&] { using std::exp; return exp(h.mu_w_chi + h.sigma_w_chi * z(kZWChi)); }(),
      h.mu_v + h.sigma_v * z(kZV),
      h.mu_h + h.sigma_h * z(kZH),
      [&] { using std::exp; return exp(h.mu_c_phi + h.sigma_c_phi * z(kZCKappa)); }(),
      softplus(h.mu_c_psi + h.sigma_c_psi * z(kZCLambda)),
      logistic(h.mu_c_omega + z(kZCOmega)),
      softplus(h.mu_c_g + h.sigma_c_g * z(kZCGamma)),
  };
  return p;
}

inline DistrictParams district_params(const ParameterSpace& space, std::span<const double> x,
                                      int district) {
  const GlobalHypers h = constrain_globals(space, x);
  DistrictParams p;
  static_cast<DistrictParamsT<double>&>(p) = district_params_eval<double>(space, h, x, district);
  p.sigma_g = p.mu_g / std::sqrt(h.alpha_c_g);
  return p;
}

// ---------------------------------------------------------------------------
// Data view consumed by the likelihood.
// ---------------------------------------------------------------------------

struct ModelData {
  int n_districts = 0;
  int n_weeks = StudyCalendar::num_weeks;
  std::vector<double> duration;      // observed hours/day, district-major
  std::vector<double> tmax;          // deg C, district-major
  std::vector<int> vacation_days;    // district-major
  std::vector<int> holiday_count;    // district-major
  std::vector<double> n_local;       // normalized incidence, district-major
  std::vector<double> n_national;    // normalized national incidence
  double likelihood_scale_factor = 1.0;  // != 1 only for fault-injection checks

  std::size_t cell(int d, int t) const {
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(n_weeks) +
           static_cast<std::size_t>(t - 1);
  }

  std::span<const double> local_of(int d) const {
    return {n_local.data() + cell(d, 1), static_cast<std::size_t>(n_weeks)};
  }

  static ModelData prepare(const WeeklyPanel& panel) {
    panel.validate();
    ModelData data;
    data.n_districts = panel.n_districts();
    data.duration = panel.duration;
    data.tmax = panel.tmax;
    data.vacation_days = panel.vacation_days;
    data.holiday_count = panel.holiday_count;
    double peak = 0.0;
    for (double v : panel.incidence_national) peak = std::max(peak, v);
    if (peak > 0.0) {
      auto norm = ingest::normalize_incidence(panel.incidence_local, panel.incidence_national);
      data.n_local = std::move(norm.local);
      data.n_national = std::move(norm.national);
    } else {
      // Degenerate zero-incidence panels (synthetic "zero" scenario): the
      // disease signal is identically zero, no scale needed.
      data.n_local.assign(panel.incidence_local.size(), 0.0);
      data.n_national.assign(panel.incidence_national.size(), 0.0);
    }
    return data;
  }
};

// ---------------------------------------------------------------------------
// Log densities.
// ---------------------------------------------------------------------------

/// Sum of all prior log densities evaluated on the constrained scale plus the
/// log-Jacobian of each coordinate's transform.
template <class S>
S log_prior(const ParameterSpace& space, std::span<const S> x) {
  using ad::log1p;
  using ad::softplus;
  using ad::square;
  using math::softplus;
  using std::exp;
  using std::log;
  using std::log1p;
  if (static_cast<int>(x.size()) != space.dim()) {
    fail(ErrorKind::evaluation_error, "parameter vector has wrong dimension");
  }

  S lp = x[kMuBase] * 0.0;  // zero of the scalar type, anchored to the tape
  for (int i = 0; i < space.dim(); ++i) {
    const ParamDef& d = space.def(i);
    const S& u = x[static_cast<std::size_t>(i)];
    if (d.prior.kind == PriorKind::std_normal) {
      lp += square(u) * -0.5 - kHalfLog2Pi;
      continue;
    }
    switch (d.transform) {
      case Transform::identity: break;
      case Transform::log_positive: lp += u; break;
      case Transform::scaled_logit:
        lp += log(d.hi - d.lo) - softplus(u) - softplus(-u);
        break;
    }
    const S c = detail::constrain_scalar(d, u);
    const Prior& p = d.prior;
    switch (p.kind) {
      case PriorKind::normal:
        lp += square((c - p.a) * (1.0 / p.b)) * -0.5 - (kHalfLog2Pi + std::log(p.b));
        break;
      case PriorKind::half_normal:
        lp += square(c * (1.0 / p.a)) * -0.5 +
              (std::log(2.0) - kHalfLog2Pi - std::log(p.a));
        break;
      case PriorKind::half_cauchy:
        lp += -log1p(square(c * (1.0 / p.a))) +
              (std::log(2.0) - std::log(3.14159265358979323846) - std::log(p.a));
        break;
      case PriorKind::exponential: lp += c * -p.a + std::log(p.a); break;
      case PriorKind::log_normal: {
        const S lc = log(c);
        lp += -lc + square((lc - p.a) * (1.0 / p.b)) * -0.5 - (kHalfLog2Pi + std::log(p.b));
        break;
      }
      case PriorKind::uniform: lp += -std::log(p.b - p.a); break;
      case PriorKind::std_normal: break;
    }
  }
  return lp;
}

/// Student-t (nu = 4) log likelihood of the observations around the model
/// predictions, one shared scale.
template <class S>
S log_likelihood(std::span<const S> predicted, std::span<const double> observed,
                 const S& sigma_l) {
  using ad::log1p;
  using ad::square;
  using std::log;
  using std::log1p;
  constexpr double kNorm = -0.98082925301172619;  // ln(3/8), t4 density at 0
  const auto n = predicted.size();
  const S inv_sigma = 1.0 / sigma_l;
  S tail_sum = square((observed[0] - predicted[0]) * inv_sigma);
  tail_sum = log1p(tail_sum * 0.25);
  for (std::size_t i = 1; i < n; ++i) {
    tail_sum += log1p(square((observed[i] - predicted[i]) * inv_sigma) * 0.25);
  }
  return tail_sum * -2.5 - log(sigma_l) * static_cast<double>(n) +
         kNorm * static_cast<double>(n);
}

/// Model-mean duration for every district-week, in district-major order.
template <class S>
std::vector<S> predict_panel(const ParameterSpace& space, const ModelData& data,
                             std::span<const S> x) {
  const HypersT<S> hypers = constrain_hypers<S>(space, x);
  std::vector<S> predicted;
  predicted.reserve(static_cast<std::size_t>(data.n_districts) *
                    static_cast<std::size_t>(data.n_weeks));
  for (int d = 0; d < data.n_districts; ++d) {
    const DistrictParamsT<S> p = district_params_eval<S>(space, hypers, x, d);
    const std::vector<S> weights = gamma_kernel_weights(p.mu_g, hypers.alpha_c_g, kKernelLag);
    const std::vector<S> signal =
        disease_signal<S>(data.local_of(d), data.n_national, p.omega, weights);
    for (int t = 1; t <= data.n_weeks; ++t) {
      const std::size_t i = data.cell(d, t);
      S pred = p.d_base * temperature_factor(data.tmax[i], p.phi_w, p.psi_w, p.chi_w);
      if (data.vacation_days[i] > 0) {
        pred *= vacation_factor(data.vacation_days[i], p.theta_v);
      }
      if (data.holiday_count[i] > 0) {
        pred *= holiday_factor(data.holiday_count[i], p.theta_h);
      }
      pred *= disease_factor(signal[static_cast<std::size_t>(t - 1)], p.kappa, p.lambda, t);
      predicted.push_back(pred);
    }
  }
  return predicted;
}

/// Joint unnormalized log posterior.
template <class S>
S log_posterior(const ParameterSpace& space, const ModelData& data, std::span<const S> x) {
  S lp = log_prior<S>(space, x);
  const std::vector<S> predicted = predict_panel<S>(space, data, x);
  S sigma_l = detail::constrain_scalar(space.def(ParameterSpace::global(kSigmaL)),
                                       x[static_cast<std::size_t>(kSigmaL)]);
  if (data.likelihood_scale_factor != 1.0) sigma_l = sigma_l * data.likelihood_scale_factor;
  lp += log_likelihood<S>(predicted, data.duration, sigma_l);
  return lp;
}

inline double log_posterior_value(const ParameterSpace& space, const ModelData& data,
                                  std::span<const double> x) {
  for (double xi : x) {
    if (!std::isfinite(xi)) fail(ErrorKind::evaluation_error, "non-finite input coordinate");
  }
  return log_posterior<double>(space, data, x);
}

/// Gradient-capable posterior evaluator; each call rebuilds the owned tape,
/// so one instance per thread.
class PosteriorGradient {
 public:
  PosteriorGradient(const ParameterSpace& space, const ModelData& data)
      : space_(&space), data_(&data) {
    tape_.reserve(4096);
  }

  /// Returns log posterior and fills grad. Throws evaluation-error on
  /// non-finite intermediates.
  double operator()(std::span<const double> x, std::span<double> grad) {
    return ad::gradient(
        tape_,
        [&](std::span<const ad::Var> xs) { return log_posterior<ad::Var>(*space_, *data_, xs); },
        x, grad);
  }

 private:
  const ParameterSpace* space_;
  const ModelData* data_;
  ad::Tape tape_;
};

}  // namespace mobi::model

#endif  // MOBIDECOMP_MODEL_HPP
