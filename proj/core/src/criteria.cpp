#include "betamix/criteria.hpp"

#include <cmath>
#include <stdexcept>

namespace betamix {

double deviance(const ModelSpec& spec, const ParamState& state,
                const GroupedDataset& data) {
  return -2.0 * log_likelihood(spec, state, data);
}

int fixed_parameter_count(const ModelSpec& spec) {
  int count = spec.p;
  if (!spec.precision.regression)
    count += 1;  // phi
  else
    count += spec.precision.p_star;
  count += spec.q * (spec.q + 1) / 2;  // Sigma_b
  if (spec.b_law == RandomEffectLaw::StudentT) count += 1;
  const int qs = spec.precision.regression ? spec.precision.q_star : 0;
  if (qs > 0 && !spec.tie_random_scales) {
    count += qs * (qs + 1) / 2;
    if (spec.d_law == RandomEffectLaw::StudentT) count += 1;
  }
  return count;
}

ParamState posterior_mean_state(const ModelSpec& spec, int m,
                                const std::vector<Trace>& traces) {
  if (traces.empty()) throw std::invalid_argument("posterior_mean_state: no traces");
  const long dim = traces.front().draws.cols();
  Vector mean = Vector::Zero(dim);
  long total = 0;
  for (const Trace& t : traces) {
    if (t.draws.cols() != dim)
      throw std::invalid_argument("posterior_mean_state: trace width mismatch");
    for (long r = 0; r < t.draws.rows(); ++r) mean += t.draws.row(r).transpose();
    total += t.draws.rows();
  }
  if (total == 0) throw std::invalid_argument("posterior_mean_state: no retained draws");
  mean /= static_cast<double>(total);
  ParamState state = unflatten_state(spec, m, mean);
  // entrywise averaging can leave a covariance slightly off the SPD cone
  if (!is_spd(state.sigma_b)) state.sigma_b = nearest_spd(state.sigma_b);
  if (state.sigma_d.rows() > 0 && !is_spd(state.sigma_d))
    state.sigma_d = nearest_spd(state.sigma_d);
  return state;
}

CriteriaReport compute_criteria(const ModelSpec& spec, const GroupedDataset& data,
                                const std::vector<Trace>& traces) {
  CriteriaReport rep;
  double dev_sum = 0.0;
  long count = 0;
  for (const Trace& t : traces) {
    for (double d : t.deviance) dev_sum += d;
    count += static_cast<long>(t.deviance.size());
  }
  if (count == 0) throw std::invalid_argument("compute_criteria: no deviance draws");
  rep.dbar = dev_sum / static_cast<double>(count);
  rep.dhat = deviance(spec, posterior_mean_state(spec, data.m(), traces), data);
  rep.p_d = rep.dbar - rep.dhat;
  rep.dic = rep.dbar + rep.p_d;
  rep.parameter_count = fixed_parameter_count(spec);
  rep.n_obs = data.total_observations();
  rep.eaic = rep.dbar + 2.0 * rep.parameter_count;
  rep.ebic = rep.dbar + rep.parameter_count * std::log(static_cast<double>(rep.n_obs));
  return rep;
}

}  // namespace betamix
