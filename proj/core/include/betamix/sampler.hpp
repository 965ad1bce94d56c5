#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "betamix/model.hpp"
#include "betamix/priors.hpp"

namespace betamix {

struct SamplerConfig {
  long iterations = 20000;  // total per chain, burn-in included
  long burn_in = 2000;
  long thin = 1;
  int chains = 2;
  std::uint64_t seed = 1;
  long adapt_window = 500;
  double target_accept_scalar = 0.44;
  double target_accept_vector = 0.234;
  // false drops the likelihood from every Metropolis target, so the chain
  // samples the joint prior; used to validate the sampler against known laws
  bool likelihood_enabled = true;
  // block names to hold at their initial values ("phi", "sigma_b", "nu_b",
  // "beta", "b", "delta", "d", "sigma_d", "nu_d"); a testing facility
  std::set<std::string> frozen_blocks;
  int threads = 0;  // 0: one thread per chain up to the hardware limit

  long retained_per_chain() const { return (iterations - burn_in + thin - 1) / thin; }
  void validate() const;  // throws SpecError
};

// Adaptive random-walk Metropolis proposal for one block.  The proposal is
// N(x, exp(2 log_step) * C) where C tracks the empirical covariance of the
// last adapt_window recorded states (plus a small ridge) and log_step follows
// a Robbins-Monro recursion toward the target acceptance rate.  freeze()
// stops all adaptation; diminishing step sizes before the freeze keep the
// post-burn-in chain a valid Markov chain.
class AdaptiveBlock {
 public:
  AdaptiveBlock(int dim, double target_rate, long adapt_window, Matrix init_cov);

  Vector propose(const Vector& current, Rng& rng) const;
  void record(const Vector& state_after_update, bool accepted);
  void freeze();
  bool frozen() const { return frozen_; }

  long proposals() const { return proposals_; }
  long post_freeze_proposals() const { return pf_proposals_; }
  long post_freeze_accepts() const { return pf_accepts_; }
  double post_freeze_rate() const {
    return pf_proposals_ ? static_cast<double>(pf_accepts_) / pf_proposals_ : 0.0;
  }
  double log_step() const { return log_step_; }
  const Matrix& covariance() const { return cov_; }
  void set_covariance(const Matrix& cov);

 private:
  void refresh_covariance();

  int dim_;
  double target_;
  long window_;
  Matrix cov_;
  Matrix chol_;  // lower factor of cov_
  double log_step_ = 0.0;
  bool frozen_ = false;
  long proposals_ = 0;
  long pf_proposals_ = 0;
  long pf_accepts_ = 0;
  std::vector<Vector> ring_;
  size_t ring_pos_ = 0;
  long records_ = 0;
};

struct BlockStats {
  long proposals = 0;
  long accepts = 0;
  double rate() const { return proposals ? static_cast<double>(accepts) / proposals : 0.0; }
};

struct Trace {
  int chain_index = 0;
  std::uint64_t seed = 0;
  // retained x n_params; column order follows parameter_names(spec, m)
  Matrix draws;
  std::vector<double> deviance;  // -2 log likelihood per retained draw
  std::map<std::string, BlockStats> acceptance;  // counted after adaptation ends
  ClampCounter clamps;
  std::string warning;
};

// Flattened view of a state; order is stable and matches parameter_names.
std::vector<std::string> parameter_names(const ModelSpec& spec, int m);
Vector flatten_state(const ModelSpec& spec, const ParamState& state);
ParamState unflatten_state(const ModelSpec& spec, int m, const Vector& values);

// Standardised coordinates used for the multivariate shrink factor: fixed
// effects, log precision / precision coefficients, log dof, and the
// log-Cholesky image of each free covariance matrix.
Vector mpsrf_coordinates(const ModelSpec& spec, const ParamState& state);

// Conjugate pieces of the Gibbs sweep, exposed for direct distributional
// checks.
Matrix conjugate_sigma_draw(const Matrix& psi, double dof,
                            const std::vector<Vector>& effects,
                            const Vector& lambdas, Rng& rng);
// lambda | rest ~ Gamma((nu + dim)/2, (nu + quad)/2) with quad = b' Sigma^{-1} b
double conjugate_lambda_draw(double nu, int dim, double quad, Rng& rng);

ParamState initial_state(const ModelSpec& spec, const PriorCatalog& catalog,
                         const GroupedDataset& data, int chain_index, Rng& rng);

Trace run_chain(const ModelSpec& spec, const PriorCatalog& catalog,
                const GroupedDataset& data, const SamplerConfig& config,
                int chain_index, const ParamState* initial_override = nullptr);

std::vector<Trace> run_ensemble(const ModelSpec& spec, const PriorCatalog& catalog,
                                const GroupedDataset& data, const SamplerConfig& config,
                                const std::vector<ParamState>* initial_overrides = nullptr);

}  // namespace betamix
