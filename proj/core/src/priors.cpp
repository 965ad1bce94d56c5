#include "betamix/priors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace betamix {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double beta_shape_log_pdf(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return kNegInf;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
         (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

double student_t_log_pdf(double x, double dof, double mu, double sigma2) {
  const double z2 = (x - mu) * (x - mu) / sigma2;
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi * sigma2) -
         0.5 * (dof + 1.0) * std::log1p(z2 / dof);
}
}  // namespace

std::string phi_prior_name(const PhiPrior& prior) {
  struct Visitor {
    std::string operator()(const InverseGammaPhiPrior&) const { return "inverse_gamma"; }
    std::string operator()(const UniformSquaredPhiPrior&) const { return "uniform_squared"; }
    std::string operator()(const ScaledBetaSquaredPhiPrior&) const {
      return "scaled_beta_squared";
    }
    std::string operator()(const LogTPhiPrior&) const { return "log_t"; }
  };
  return std::visit(Visitor{}, prior);
}

double phi_log_prior(const PhiPrior& prior, double phi) {
  if (!(phi > 0.0) || !std::isfinite(phi)) return kNegInf;
  struct Visitor {
    double phi;
    double operator()(const InverseGammaPhiPrior& p) const {
      if (!(p.eps > 0.0)) throw SpecError("phi prior: eps must be positive");
      return p.eps * std::log(p.eps) - std::lgamma(p.eps) -
             (p.eps + 1.0) * std::log(phi) - p.eps / phi;
    }
    double operator()(const UniformSquaredPhiPrior& p) const {
      if (!(p.a > 0.0)) throw SpecError("phi prior: a must be positive");
      if (phi >= p.a * p.a) return kNegInf;
      return -std::log(2.0 * p.a) - 0.5 * std::log(phi);
    }
    double operator()(const ScaledBetaSquaredPhiPrior& p) const {
      if (!(p.a > 0.0)) throw SpecError("phi prior: a must be positive");
      if (!(p.eps >= 0.0)) throw SpecError("phi prior: eps must be non-negative");
      if (phi >= p.a * p.a) return kNegInf;
      const double root = std::sqrt(phi) / p.a;
      return beta_shape_log_pdf(root, 1.0 + p.eps, 1.0 + p.eps) -
             std::log(2.0 * p.a) - 0.5 * std::log(phi);
    }
    double operator()(const LogTPhiPrior& p) const {
      if (!(p.dof > 0.0) || !(p.sigma2 > 0.0))
        throw SpecError("phi prior: log_t needs positive dof and sigma2");
      const double x = std::log(phi);
      return student_t_log_pdf(x, p.dof, p.mu, p.sigma2) - x;
    }
  };
  return std::visit(Visitor{phi}, prior);
}

double phi_prior_sample(const PhiPrior& prior, Rng& rng) {
  struct Visitor {
    Rng& rng;
    double operator()(const InverseGammaPhiPrior& p) const {
      return 1.0 / rng.gamma(p.eps, p.eps);
    }
    double operator()(const UniformSquaredPhiPrior& p) const {
      const double u = rng.uniform(0.0, p.a);
      return u * u;
    }
    double operator()(const ScaledBetaSquaredPhiPrior& p) const {
      const double b = rng.beta(1.0 + p.eps, 1.0 + p.eps);
      return (p.a * b) * (p.a * b);
    }
    double operator()(const LogTPhiPrior& p) const {
      const double t = rng.normal() / std::sqrt(rng.chi_square(p.dof) / p.dof);
      return std::exp(p.mu + std::sqrt(p.sigma2) * t);
    }
  };
  return std::visit(Visitor{rng}, prior);
}

void FixedEffectPrior::validate(int dim, const std::string& label) const {
  if (mean.size() != dim)
    throw SpecError(label + " prior: mean has length " + std::to_string(mean.size()) +
                    ", expected " + std::to_string(dim));
  if (scale.rows() != dim || scale.cols() != dim || !is_spd(scale))
    throw SpecError(label + " prior: scale must be SPD of order " + std::to_string(dim));
  if (student_t && !(dof > 0.0))
    throw SpecError(label + " prior: dof must be positive");
}

double fixed_effect_log_prior(const FixedEffectPrior& prior, const Vector& coef) {
  if (prior.student_t) return mvt_log_pdf(coef, MvT(prior.dof, prior.mean, prior.scale));
  return mvnormal_log_pdf(coef, prior.mean, prior.scale);
}

Vector fixed_effect_sample(const FixedEffectPrior& prior, Rng& rng) {
  if (prior.student_t) return mvt_sample(MvT(prior.dof, prior.mean, prior.scale), rng);
  return mvnormal_sample(prior.mean, prior.scale, rng);
}

double nu_log_prior(double nu, double rate, bool above_two) {
  if (!(rate > 0.0)) throw SpecError("nu prior: rate must be positive");
  const double lower = above_two ? 2.0 : 0.0;
  if (!(nu > lower)) return kNegInf;
  // truncation only rescales by exp(rate * lower)
  return std::log(rate) - rate * nu + rate * lower;
}

double nu_prior_sample(double rate, bool above_two, Rng& rng) {
  return (above_two ? 2.0 : 0.0) + rng.exponential(rate);
}

void PriorCatalog::validate(const ModelSpec& spec) const {
  spec.validate();
  beta_prior.validate(spec.p, "beta");
  if (spec.precision.regression) {
    if (phi_prior.has_value())
      throw SpecError("priors: phi prior given but precision is a regression");
    if (spec.precision.p_star > 0) {
      if (!delta_prior.has_value()) throw SpecError("priors: delta prior missing");
      delta_prior->validate(spec.precision.p_star, "delta");
    } else if (delta_prior.has_value()) {
      throw SpecError("priors: delta prior given without fixed precision effects");
    }
  } else {
    if (!phi_prior.has_value()) throw SpecError("priors: phi prior missing");
    if (delta_prior.has_value())
      throw SpecError("priors: delta prior given for a constant-precision model");
  }
  if (psi_b.rows() != spec.q || psi_b.cols() != spec.q || !is_spd(psi_b))
    throw SpecError("priors: Sigma_b scale must be SPD of order " + std::to_string(spec.q));
  if (!(c_b > spec.q - 1)) throw SpecError("priors: Sigma_b dof too small");
  const int qs = spec.precision.q_star;
  if (spec.precision.regression && qs > 0 && !spec.tie_random_scales) {
    if (!psi_d.has_value()) throw SpecError("priors: Sigma_d scale missing");
    if (psi_d->rows() != qs || psi_d->cols() != qs || !is_spd(*psi_d))
      throw SpecError("priors: Sigma_d scale must be SPD of order " + std::to_string(qs));
    if (!(c_d > qs - 1)) throw SpecError("priors: Sigma_d dof too small");
  } else if (psi_d.has_value()) {
    throw SpecError("priors: Sigma_d scale given but not used");
  }
  if (!(nu_rate > 0.0)) throw SpecError("priors: nu rate must be positive");
}

double log_prior(const PriorCatalog& catalog, const ModelSpec& spec,
                 const ParamState& state) {
  double total = fixed_effect_log_prior(catalog.beta_prior, state.beta);

  total += inv_wishart_log_pdf(state.sigma_b, InvWishart(catalog.psi_b, catalog.c_b));
  const bool b_is_t = spec.b_law == RandomEffectLaw::StudentT;
  if (b_is_t) {
    total += nu_log_prior(state.nu_b, catalog.nu_rate, catalog.nu_above_two);
    if (!std::isfinite(total)) return kNegInf;
    const MvT law(state.nu_b, Vector::Zero(spec.q), state.sigma_b);
    for (const Vector& bi : state.b) total += mvt_log_pdf(bi, law);
  } else {
    for (const Vector& bi : state.b)
      total += mvnormal_log_pdf(bi, Vector::Zero(spec.q), state.sigma_b);
  }

  if (!spec.precision.regression) {
    total += phi_log_prior(*catalog.phi_prior, state.phi);
    return total;
  }

  if (spec.precision.p_star > 0)
    total += fixed_effect_log_prior(*catalog.delta_prior, state.delta);
  const int qs = spec.precision.q_star;
  if (qs > 0) {
    const Matrix& sigma = spec.tie_random_scales ? state.sigma_b : state.sigma_d;
    const double nu = spec.tie_random_scales ? state.nu_b : state.nu_d;
    if (!spec.tie_random_scales) {
      total += inv_wishart_log_pdf(state.sigma_d, InvWishart(*catalog.psi_d, catalog.c_d));
      if (spec.d_law == RandomEffectLaw::StudentT)
        total += nu_log_prior(state.nu_d, catalog.nu_rate, catalog.nu_above_two);
    }
    if (!std::isfinite(total)) return kNegInf;
    if (spec.d_law == RandomEffectLaw::StudentT) {
      const MvT law(nu, Vector::Zero(qs), sigma);
      for (const Vector& di : state.d) total += mvt_log_pdf(di, law);
    } else {
      for (const Vector& di : state.d)
        total += mvnormal_log_pdf(di, Vector::Zero(qs), sigma);
    }
  }
  return total;
}

}  // namespace betamix
