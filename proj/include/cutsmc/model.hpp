// SPDX-License-Identifier: Apache-2.0
#pragma once

// Target-model abstraction: a cut distribution over nu plus the conditional
// posterior over theta known up to normalization, with optional exact
// samplers and analytic gradients when the model form provides them.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cutsmc/errors.hpp"
#include "cutsmc/rng.hpp"
#include "cutsmc/vecmath.hpp"

namespace cutsmc {

/// Cut parameter nu: the coordinates whose distribution is fixed and never
/// updated by the data.
struct CutPoint {
  std::vector<double> values;

  bool operator==(const CutPoint&) const = default;
};

/// Calibration parameter theta, inferred through the conditional posterior.
struct Theta {
  std::vector<double> values;

  bool operator==(const Theta&) const = default;
};

struct SupportBox {
  std::vector<double> lower;
  std::vector<double> upper;

  bool contains(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
  }

  double width(std::size_t i) const { return upper[i] - lower[i]; }
};

/// A conditional target: cut distribution p_nu plus log q(theta; nu), the
/// conditional posterior up to a theta-independent constant. All callables
/// must be pure; random streams are always caller-owned.
struct ConditionalTargetModel {
  std::string id;
  int d = 0;
  int d_nu = 0;
  std::function<CutPoint(RandomStream&)> cut_sampler;
  std::function<double(const CutPoint&, const Theta&)> log_unnorm;
  // Optional extras, filled by factories when the model form provides them.
  std::function<Theta(const CutPoint&, RandomStream&)> exact_initial_sampler;
  std::function<std::vector<double>(const CutPoint&, const Theta&)> gradient;
  std::function<Theta(const CutPoint&, RandomStream&)> overdispersed_init;
  std::optional<SupportBox> support_box;
};

inline void validate_model(const ConditionalTargetModel& model) {
  require(model.d >= 1, ErrorKind::configuration, "model dimension d must be >= 1");
  require(model.d_nu >= 1, ErrorKind::configuration, "model dimension d_nu must be >= 1");
  require(static_cast<bool>(model.cut_sampler), ErrorKind::configuration,
          "model requires a cut sampler");
  require(static_cast<bool>(model.log_unnorm), ErrorKind::configuration,
          "model requires a log-density");
  if (model.support_box) {
    require(model.support_box->lower.size() == static_cast<std::size_t>(model.d) &&
                model.support_box->upper.size() == static_cast<std::size_t>(model.d),
            ErrorKind::configuration, "support box dimension mismatch");
  }
}

/// log q(theta; nu), finite on the support and -inf outside. Additive
/// constants may depend on nu only when they cancel in weight ratios.
inline double log_unnorm_conditional(const ConditionalTargetModel& model,
                                     const CutPoint& nu, const Theta& theta) {
  require(nu.values.size() == static_cast<std::size_t>(model.d_nu),
          ErrorKind::invalid_input, "cut point dimension mismatch");
  require(theta.values.size() == static_cast<std::size_t>(model.d),
          ErrorKind::invalid_input, "theta dimension mismatch");
  const double value = model.log_unnorm(nu, theta);
  require(!std::isnan(value), ErrorKind::model_evaluation,
          "model log-density returned NaN");
  return value;
}

/// count i.i.d. draws from p_nu, reproducible given the stream state.
inline std::vector<CutPoint> sample_cut(const ConditionalTargetModel& model,
                                        RandomStream& rng, int count) {
  require(count >= 1, ErrorKind::invalid_input, "sample_cut requires count >= 1");
  std::vector<CutPoint> draws;
  draws.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) draws.push_back(model.cut_sampler(rng));
  return draws;
}

// ---------------------------------------------------------------------------
// Cut-distribution helpers shared by factories, configs, and tests.
// ---------------------------------------------------------------------------

inline std::function<CutPoint(RandomStream&)> point_mass_cut(CutPoint nu0) {
  return [nu0 = std::move(nu0)](RandomStream&) { return nu0; };
}

inline std::function<CutPoint(RandomStream&)> uniform_box_cut(
    std::vector<double> lower, std::vector<double> upper) {
  return [lower = std::move(lower), upper = std::move(upper)](RandomStream& rng) {
    CutPoint nu;
    nu.values.resize(lower.size());
    for (std::size_t i = 0; i < lower.size(); ++i)
      nu.values[i] = rng.uniform(lower[i], upper[i]);
    return nu;
  };
}

/// Independent normal coordinates (diagonal covariance).
inline std::function<CutPoint(RandomStream&)> normal_cut(
    std::vector<double> mean, std::vector<double> sd) {
  return [mean = std::move(mean), sd = std::move(sd)](RandomStream& rng) {
    CutPoint nu;
    nu.values.resize(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i)
      nu.values[i] = rng.normal(mean[i], sd[i]);
    return nu;
  };
}

// ---------------------------------------------------------------------------
// Gaussian conjugate model: y | theta ~ N_d(theta, sigma^2 I),
// theta | nu ~ N_d(f(nu), sigma_P^2 I), so the conditional posterior is
// N_d(w*y + (1-w)*f(nu), c I).
// ---------------------------------------------------------------------------

struct GaussianConjugateSpec {
  std::vector<double> y;
  double sigma = 1.0;
  double sigma_p = 1.0;
  std::function<std::vector<double>(const CutPoint&)> f;
  std::optional<double> lipschitz_delta;

  /// w = sigma^-2 / (sigma^-2 + sigma_P^-2), in (0,1).
  double data_weight() const {
    const double prec = 1.0 / (sigma * sigma);
    const double prec_p = 1.0 / (sigma_p * sigma_p);
    return prec / (prec + prec_p);
  }

  /// c = (sigma^-2 + sigma_P^-2)^-1, the conditional posterior variance.
  double posterior_variance() const {
    const double prec = 1.0 / (sigma * sigma);
    const double prec_p = 1.0 / (sigma_p * sigma_p);
    return 1.0 / (prec + prec_p);
  }
};

inline void validate_gaussian_spec(const GaussianConjugateSpec& spec) {
  require(spec.sigma > 0.0 && spec.sigma_p > 0.0, ErrorKind::configuration,
          "gaussian model requires positive sigma and sigma_p");
  require(!spec.y.empty(), ErrorKind::configuration, "gaussian model requires data y");
  require(static_cast<bool>(spec.f), ErrorKind::configuration,
          "gaussian model requires a simulator mean map f");
  const double w = spec.data_weight();
  require(w > 0.0 && w < 1.0, ErrorKind::configuration, "derived weight w not in (0,1)");
  require(spec.posterior_variance() > 0.0, ErrorKind::configuration,
          "derived variance c not positive");
}

/// Exact conditional posterior N_d(w*y + (1-w)*f(nu), c I).
inline std::pair<std::vector<double>, double> gaussian_posterior_params(
    const GaussianConjugateSpec& spec, const CutPoint& nu) {
  const double w = spec.data_weight();
  const double c = spec.posterior_variance();
  const std::vector<double> fv = spec.f(nu);
  require(fv.size() == spec.y.size(), ErrorKind::invalid_input,
          "simulator map output dimension mismatch");
  std::vector<double> m(spec.y.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = w * spec.y[i] + (1.0 - w) * fv[i];
  return {std::move(m), c};
}

inline ConditionalTargetModel make_gaussian_conjugate_model(
    GaussianConjugateSpec spec, std::function<CutPoint(RandomStream&)> cut_sampler,
    int d_nu) {
  validate_gaussian_spec(spec);
  ConditionalTargetModel model;
  model.id = "gaussian-conjugate";
  model.d = static_cast<int>(spec.y.size());
  model.d_nu = d_nu;
  model.cut_sampler = std::move(cut_sampler);
  const double c = spec.posterior_variance();
  // Exact log-density kernel -||theta - m(nu)||^2 / (2c); the nu-dependent
  // normalizer is constant in theta and identical across weight ratios.
  model.log_unnorm = [spec, c](const CutPoint& nu, const Theta& theta) {
    const double w = spec.data_weight();
    const std::vector<double> fv = spec.f(nu);
    double ss = 0.0;
    for (std::size_t i = 0; i < theta.values.size(); ++i) {
      const double r = theta.values[i] - (w * spec.y[i] + (1.0 - w) * fv[i]);
      ss += r * r;
    }
    return -ss / (2.0 * c);
  };
  model.exact_initial_sampler = [spec, c](const CutPoint& nu, RandomStream& rng) {
    auto [m, var] = gaussian_posterior_params(spec, nu);
    (void)var;
    Theta theta;
    theta.values.resize(m.size());
    const double sd = std::sqrt(c);
    for (std::size_t i = 0; i < m.size(); ++i) theta.values[i] = rng.normal(m[i], sd);
    return theta;
  };
  model.gradient = [spec, c](const CutPoint& nu, const Theta& theta) {
    const auto [m, var] = gaussian_posterior_params(spec, nu);
    (void)var;
    std::vector<double> g(theta.values.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = -(theta.values[i] - m[i]) / c;
    return g;
  };
  // Conditional mean +- 3 posterior sd, used as a dispersed chain start.
  model.overdispersed_init = [spec, c](const CutPoint& nu, RandomStream& rng) {
    auto [m, var] = gaussian_posterior_params(spec, nu);
    (void)var;
    Theta theta;
    theta.values.resize(m.size());
    const double sd = 3.0 * std::sqrt(c);
    for (std::size_t i = 0; i < m.size(); ++i) theta.values[i] = rng.normal(m[i], sd);
    return theta;
  };
  validate_model(model);
  return model;
}

// ---------------------------------------------------------------------------
// Non-Gaussian toy model: y | theta, nu ~ N_2(f(theta, nu), diag(0.1, 1)),
// theta_1, theta_2 ~ U(-30, 30) independent, nu scalar.
// ---------------------------------------------------------------------------

inline constexpr double kAppendixCNoiseVar1 = 0.1;
inline constexpr double kAppendixCNoiseVar2 = 1.0;
inline constexpr double kAppendixCBoxHalfWidth = 30.0;
inline constexpr double kTanSingularTolerance = 1e-12;

/// Observation used by the built-in toy model: one realization simulated at
/// truth theta=(1,2), nu=1 with the model noise, drawn from
/// RandomStream(kAppendixCDataSeed) and frozen here.
inline constexpr std::uint64_t kAppendixCDataSeed = 424242;
inline std::vector<double> appendixc_default_observation() {
  return {-0.62270560798545305, 6.2798778217606985};
}

/// Forward map (sin(t1) cos(t2) tan(nu), t1^2 + t2^2 + nu^2).
inline std::vector<double> appendixc_forward(double theta1, double theta2, double nu) {
  require(std::abs(std::cos(nu)) >= kTanSingularTolerance, ErrorKind::singular_input,
          "tan(nu) singular: |cos(nu)| below tolerance");
  return {std::sin(theta1) * std::cos(theta2) * std::tan(nu),
          theta1 * theta1 + theta2 * theta2 + nu * nu};
}

struct AppendixCSpec {
  std::vector<double> y_obs = appendixc_default_observation();
  double cut_lower = 0.3;
  double cut_upper = 1.0;
};

inline ConditionalTargetModel make_appendix_c_model(AppendixCSpec spec = {}) {
  require(spec.y_obs.size() == 2, ErrorKind::configuration,
          "appendix-c observation must have length 2");
  require(spec.cut_lower < spec.cut_upper, ErrorKind::configuration,
          "appendix-c cut range invalid");
  ConditionalTargetModel model;
  model.id = "appendix-c";
  model.d = 2;
  model.d_nu = 1;
  model.support_box = SupportBox{{-kAppendixCBoxHalfWidth, -kAppendixCBoxHalfWidth},
                                 {kAppendixCBoxHalfWidth, kAppendixCBoxHalfWidth}};
  model.cut_sampler = uniform_box_cut({spec.cut_lower}, {spec.cut_upper});
  model.log_unnorm = [spec, box = *model.support_box](const CutPoint& nu,
                                                      const Theta& theta) {
    if (!box.contains(theta.values)) return -std::numeric_limits<double>::infinity();
    const double t1 = theta.values[0];
    const double t2 = theta.values[1];
    const double v = nu.values[0];
    require(std::abs(std::cos(v)) >= kTanSingularTolerance, ErrorKind::singular_input,
            "tan(nu) singular: |cos(nu)| below tolerance");
    const double r1 = spec.y_obs[0] - std::sin(t1) * std::cos(t2) * std::tan(v);
    const double r2 = spec.y_obs[1] - (t1 * t1 + t2 * t2 + v * v);
    return -r1 * r1 / (2.0 * kAppendixCNoiseVar1) - r2 * r2 / (2.0 * kAppendixCNoiseVar2);
  };
  model.overdispersed_init = [box = *model.support_box](const CutPoint&,
                                                        RandomStream& rng) {
    Theta theta;
    theta.values.resize(box.lower.size());
    for (std::size_t i = 0; i < theta.values.size(); ++i)
      theta.values[i] = rng.uniform(box.lower[i], box.upper[i]);
    return theta;
  };
  validate_model(model);
  return model;
}

}  // namespace cutsmc
