#ifndef MOBIDECOMP_PARAMS_HPP
#define MOBIDECOMP_PARAMS_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobidecomp/common.hpp"
#include "mobidecomp/special.hpp"

namespace mobi::model {

/// Map between a parameter's sampling coordinate (unconstrained real) and its
/// support: positive scales via exp, interval uniforms via scaled logit.
enum class Transform { identity, log_positive, scaled_logit };

enum class PriorKind {
  normal,       // a = mean, b = sd
  half_normal,  // a = sd
  half_cauchy,  // a = scale
  exponential,  // a = rate
  log_normal,   // a = log-mean, b = log-sd
  uniform,      // a = lower, b = upper
  std_normal,
};

struct Prior {
  PriorKind kind = PriorKind::std_normal;
  double a = 0.0;
  double b = 0.0;
};

struct ParamDef {
  std::string name;
  Transform transform = Transform::identity;
  Prior prior;
  double lo = 0.0;  // scaled_logit bounds
  double hi = 0.0;
};

/// Order of the 21 global hyperparameters in the flat vector.
enum GlobalIndex : int {
  kMuBase = 0,
  kSigmaBase,
  kMuWPhi,
  kSigmaWPhi,
  kMuWPsi,
  kSigmaWPsi,
  kMuWChi,
  kSigmaWChi,
  kMuV,
  kSigmaV,
  kMuH,
  kSigmaH,
  kMuCPhi,
  kSigmaCPhi,
  kMuCPsi,
  kSigmaCPsi,
  kMuCOmega,
  kMuCG,
  kSigmaCG,
  kAlphaCG,
  kSigmaL,
  kNumGlobals,
};

/// Order of the 10 standardized offsets within each district block.
enum OffsetIndex : int {
  kZBase = 0,
  kZWPhi,
  kZWPsi,
  kZWChi,
  kZV,
  kZH,
  kZCKappa,
  kZCLambda,
  kZCOmega,
  kZCGamma,
  kNumOffsets,
};

/// Layout of the flat unconstrained vector: the 21 globals first, then one
/// 10-offset block per district in AGS order. The mapping is a bijection and
/// stable across runs for a fixed district set.
class ParameterSpace {
 public:
  explicit ParameterSpace(std::vector<std::string> district_keys)
      : district_keys_(std::move(district_keys)) {
    defs_.reserve(static_cast<std::size_t>(dim()));
    auto add = [&](const std::string& name, Transform tr, Prior prior, double lo = 0.0,
                   double hi = 0.0) {
      defs_.push_back(ParamDef{name, tr, prior, lo, hi});
    };
    add("mu_base", Transform::identity, {PriorKind::normal, 0.0, 0.2});
    add("sigma_base", Transform::log_positive, {PriorKind::half_normal, 0.3});
    add("mu_W_phi", Transform::log_positive, {PriorKind::half_cauchy, 1.0});
    add("sigma_W_phi", Transform::log_positive, {PriorKind::exponential, 10.0});
    add("mu_W_psi", Transform::identity, {PriorKind::normal, 15.0, 3.0});
    add("sigma_W_psi", Transform::log_positive, {PriorKind::exponential, 10.0});
    add("mu_W_chi", Transform::identity, {PriorKind::normal, std::log(4.0), 0.5});
    add("sigma_W_chi", Transform::log_positive, {PriorKind::exponential, 10.0});
    add("mu_V", Transform::scaled_logit, {PriorKind::uniform, 0.8, 1.0}, 0.8, 1.0);
    add("sigma_V", Transform::log_positive, {PriorKind::exponential, 10.0});
    add("mu_H", Transform::scaled_logit, {PriorKind::uniform, 0.9, 1.0}, 0.9, 1.0);
    add("sigma_H", Transform::log_positive, {PriorKind::half_normal, 0.25});
    add("mu_C_phi", Transform::identity, {PriorKind::normal, std::log(1.5), 0.25});
    add("sigma_C_phi", Transform::log_positive, {PriorKind::exponential, 10.0});
    add("mu_C_psi", Transform::identity, {PriorKind::normal, 30.0, 1.0});
    add("sigma_C_psi", Transform::log_positive, {PriorKind::half_normal, 0.1});
    add("mu_C_omega", Transform::identity, {PriorKind::normal, 0.0, 0.5});
    add("mu_C_G", Transform::identity, {PriorKind::normal, 3.0, 1.0});
    add("sigma_C_G", Transform::log_positive, {PriorKind::half_normal, 0.25});
    add("alpha_C_G", Transform::log_positive, {PriorKind::log_normal, std::log(3.0), 0.125});
    add("sigma_L", Transform::log_positive, {PriorKind::half_cauchy, 2.0});

    static const char* offset_names[kNumOffsets] = {
        "z_base", "z_W_phi", "z_W_psi", "z_W_chi",  "z_V",
        "z_H",    "z_C_kappa", "z_C_lambda", "z_C_omega", "z_C_gamma"};
    for (const auto& key : district_keys_) {
      for (int o = 0; o < kNumOffsets; ++o) {
        add(std::string(offset_names[o]) + "[" + key + "]", Transform::identity,
            {PriorKind::std_normal});
      }
    }
  }

  int n_districts() const { return static_cast<int>(district_keys_.size()); }
  int dim() const { return kNumGlobals + kNumOffsets * n_districts(); }
  const std::vector<std::string>& district_keys() const { return district_keys_; }

  static int global(GlobalIndex g) { return static_cast<int>(g); }

  int offset(int district, OffsetIndex o) const {
    return kNumGlobals + district * kNumOffsets + static_cast<int>(o);
  }

  const ParamDef& def(int i) const { return defs_[static_cast<std::size_t>(i)]; }
  const std::string& name(int i) const { return defs_[static_cast<std::size_t>(i)].name; }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < defs_.size(); ++i) {
      if (defs_[i].name == name) return static_cast<int>(i);
    }
    fail(ErrorKind::range_error, "unknown parameter '" + name + "'");
  }

  /// Unconstrained coordinate -> constrained value.
  double constrain(int i, double u) const {
    const ParamDef& d = def(i);
    switch (d.transform) {
      case Transform::identity: return u;
      case Transform::log_positive: return std::exp(u);
      case Transform::scaled_logit: return d.lo + (d.hi - d.lo) * math::logistic(u);
    }
    return u;
  }

  /// Constrained value -> unconstrained coordinate.
  double unconstrain(int i, double c) const {
    const ParamDef& d = def(i);
    switch (d.transform) {
      case Transform::identity: return c;
      case Transform::log_positive:
        if (!(c > 0.0)) fail(ErrorKind::domain_error, d.name + " must be positive");
        return std::log(c);
      case Transform::scaled_logit: {
        if (!(c > d.lo && c < d.hi)) {
          fail(ErrorKind::domain_error, d.name + " outside its interval");
        }
        const double p = (c - d.lo) / (d.hi - d.lo);
        return std::log(p / (1.0 - p));
      }
    }
    return c;
  }

  /// One draw from the prior, returned in unconstrained coordinates. Used to
  /// initialize chains.
  std::vector<double> sample_prior(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(dim()));
    for (int i = 0; i < dim(); ++i) {
      const Prior& p = def(i).prior;
      double c = 0.0;
      switch (p.kind) {
        case PriorKind::normal: c = p.a + p.b * normal(rng); break;
        case PriorKind::std_normal: c = normal(rng); break;
        case PriorKind::half_normal: c = std::fabs(p.a * normal(rng)); break;
        case PriorKind::half_cauchy:
          c = p.a * std::fabs(std::tan(3.14159265358979323846 * (unif(rng) - 0.5)));
          break;
        case PriorKind::exponential: c = -std::log1p(-unif(rng)) / p.a; break;
        case PriorKind::log_normal: c = std::exp(p.a + p.b * normal(rng)); break;
        case PriorKind::uniform: c = p.a + (p.b - p.a) * unif(rng); break;
      }
      x[static_cast<std::size_t>(i)] = unconstrain(i, c);
    }
    return x;
  }

  nlohmann::json layout_json() const {
    nlohmann::json params = nlohmann::json::array();
    for (int i = 0; i < dim(); ++i) {
      const ParamDef& d = def(i);
      nlohmann::json p;
      p["index"] = i;
      p["name"] = d.name;
      switch (d.transform) {
        case Transform::identity: p["transform"] = "identity"; break;
        case Transform::log_positive: p["transform"] = "log"; break;
        case Transform::scaled_logit:
          p["transform"] = "scaled_logit";
          p["lower"] = d.lo;
          p["upper"] = d.hi;
          break;
      }
      nlohmann::json prior;
      switch (d.prior.kind) {
        case PriorKind::normal: prior = {{"dist", "normal"}, {"mu", d.prior.a}, {"sigma", d.prior.b}}; break;
        case PriorKind::std_normal: prior = {{"dist", "normal"}, {"mu", 0.0}, {"sigma", 1.0}}; break;
        case PriorKind::half_normal: prior = {{"dist", "half_normal"}, {"sigma", d.prior.a}}; break;
        case PriorKind::half_cauchy: prior = {{"dist", "half_cauchy"}, {"scale", d.prior.a}}; break;
        case PriorKind::exponential: prior = {{"dist", "exponential"}, {"rate", d.prior.a}}; break;
        case PriorKind::log_normal:
          prior = {{"dist", "log_normal"}, {"log_mu", d.prior.a}, {"log_sigma", d.prior.b}};
          break;
        case PriorKind::uniform: prior = {{"dist", "uniform"}, {"lower", d.prior.a}, {"upper", d.prior.b}}; break;
      }
      p["prior"] = prior;
      params.push_back(std::move(p));
    }
    nlohmann::json out;
    out["n_globals"] = static_cast<int>(kNumGlobals);
    out["n_offsets_per_district"] = static_cast<int>(kNumOffsets);
    out["districts"] = district_keys_;
    out["parameters"] = std::move(params);
    return out;
  }

 private:
  std::vector<std::string> district_keys_;
  std::vector<ParamDef> defs_;
};

}  // namespace mobi::model

#endif  // MOBIDECOMP_PARAMS_HPP
