#pragma once

#include <vector>

#include "betamix/sampler.hpp"

namespace betamix {

struct CriteriaReport {
  double dbar = 0.0;   // posterior mean deviance
  double dhat = 0.0;   // deviance at the posterior mean state
  double p_d = 0.0;    // dbar - dhat
  double dic = 0.0;    // dbar + p_d
  double eaic = 0.0;   // dbar + 2 * parameter_count
  double ebic = 0.0;   // dbar + parameter_count * log(n_obs)
  int parameter_count = 0;
  long n_obs = 0;
};

double deviance(const ModelSpec& spec, const ParamState& state,
                const GroupedDataset& data);

// Count of non-auxiliary model parameters used by the AIC/BIC penalties:
// fixed effects, the precision block, each free covariance (upper triangle),
// and each Student-t dof.  Random effects and mixing weights do not count.
int fixed_parameter_count(const ModelSpec& spec);

// Componentwise posterior mean over every retained draw of every chain;
// covariance blocks are projected back to SPD if averaging left the cone.
ParamState posterior_mean_state(const ModelSpec& spec, int m,
                                const std::vector<Trace>& traces);

CriteriaReport compute_criteria(const ModelSpec& spec, const GroupedDataset& data,
                                const std::vector<Trace>& traces);

}  // namespace betamix
