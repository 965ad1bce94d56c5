#pragma once

#include <optional>
#include <string>
#include <variant>

#include "betamix/distributions.hpp"
#include "betamix/errors.hpp"
#include "betamix/model.hpp"

namespace betamix {

// Priors for the common precision phi of the constant-precision model.  All
// four keep phi positive; the squared families have bounded support (0, a^2).

// phi ~ InverseGamma(eps, eps), vague for small eps
struct InverseGammaPhiPrior {
  double eps = 0.01;
};

// phi = U^2 with U ~ Uniform(0, a); density 1/(2a sqrt(phi)) on (0, a^2)
struct UniformSquaredPhiPrior {
  double a = 50.0;
};

// phi = (a B)^2 with B ~ Beta(1 + eps, 1 + eps); eps = 0 recovers the
// uniform-squared family
struct ScaledBetaSquaredPhiPrior {
  double a = 50.0;
  double eps = 0.5;
};

// log(phi) ~ Student-t(dof, mu, sigma2); sigma2 is the squared scale
struct LogTPhiPrior {
  double dof = 10.0;
  double mu = 0.0;
  double sigma2 = 10.0;
};

using PhiPrior = std::variant<InverseGammaPhiPrior, UniformSquaredPhiPrior,
                              ScaledBetaSquaredPhiPrior, LogTPhiPrior>;

std::string phi_prior_name(const PhiPrior& prior);
// -inf outside the support
double phi_log_prior(const PhiPrior& prior, double phi);
double phi_prior_sample(const PhiPrior& prior, Rng& rng);

// Prior for a fixed-effect coefficient block (beta or delta): either
// multivariate normal or multivariate Student-t with the given scale matrix.
struct FixedEffectPrior {
  bool student_t = true;
  double dof = 10.0;  // ignored when student_t == false
  Vector mean;
  Matrix scale;

  void validate(int dim, const std::string& label) const;  // throws SpecError
};

double fixed_effect_log_prior(const FixedEffectPrior& prior, const Vector& coef);
Vector fixed_effect_sample(const FixedEffectPrior& prior, Rng& rng);

// Exponential(rate) prior over a Student-t dof, optionally restricted to
// nu > 2 so the random-effect covariance exists.
double nu_log_prior(double nu, double rate, bool above_two);
double nu_prior_sample(double rate, bool above_two, Rng& rng);

// Everything the posterior needs besides the likelihood.
struct PriorCatalog {
  FixedEffectPrior beta_prior;
  std::optional<PhiPrior> phi_prior;             // constant-precision model
  std::optional<FixedEffectPrior> delta_prior;   // regression precision, p* > 0
  Matrix psi_b;                                  // InvWishart scale for Sigma_b
  double c_b = 5.0;
  std::optional<Matrix> psi_d;                   // untied Sigma_d, q* > 0
  double c_d = 5.0;
  double nu_rate = 0.1;
  bool nu_above_two = false;

  void validate(const ModelSpec& spec) const;  // throws SpecError
};

// Joint log prior density at a state.  Random effects enter through their
// marginal law (Student-t or normal given Sigma); the gamma mixing weights of
// the augmented sampler are not part of this quantity.
double log_prior(const PriorCatalog& catalog, const ModelSpec& spec,
                 const ParamState& state);

}  // namespace betamix
