#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "betamix/distributions.hpp"
#include "betamix/errors.hpp"

namespace betamix {

enum class RandomEffectLaw { Normal, StudentT };

// Precision side of the model.  regression == false means one common phi
// shared by every observation; regression == true means a log-linear submodel
// with p_star fixed and q_star grouped coefficients.
struct PrecisionSpec {
  bool regression = false;
  int p_star = 0;
  int q_star = 0;
};

struct ModelSpec {
  int p = 0;  // location fixed effects
  int q = 0;  // location random effects per group
  PrecisionSpec precision;
  RandomEffectLaw b_law = RandomEffectLaw::StudentT;
  RandomEffectLaw d_law = RandomEffectLaw::StudentT;
  // share (Sigma, nu) between the location and precision random effects;
  // requires q == q_star and matching laws
  bool tie_random_scales = false;

  bool has_d() const { return precision.regression && precision.q_star > 0; }
  void validate() const;  // throws SpecError
};

// One grouping unit: n_i responses with their covariate rows.  z/w/h rows may
// be empty vectors when the corresponding design block is absent.
struct Group {
  std::string unit_id;
  std::vector<double> responses;
  std::vector<Vector> x_rows;
  std::vector<Vector> z_rows;
  std::vector<Vector> w_rows;
  std::vector<Vector> h_rows;

  int size() const { return static_cast<int>(responses.size()); }
};

class GroupedDataset {
 public:
  explicit GroupedDataset(std::vector<Group> groups);  // throws DataError

  int m() const { return static_cast<int>(groups_.size()); }
  const Group& group(int i) const { return groups_[static_cast<size_t>(i)]; }
  const std::vector<Group>& groups() const { return groups_; }
  long total_observations() const { return n_total_; }

  int x_dim() const { return x_dim_; }
  int z_dim() const { return z_dim_; }
  int w_dim() const { return w_dim_; }
  int h_dim() const { return h_dim_; }

  // dimensions must match spec.p/q/p*/q*; throws DataError otherwise
  void check_compatible(const ModelSpec& spec) const;

 private:
  std::vector<Group> groups_;
  long n_total_ = 0;
  int x_dim_ = 0, z_dim_ = 0, w_dim_ = 0, h_dim_ = 0;
};

// Full parameter vector of one MCMC state.  Fields that a given spec does not
// use stay at their default sizes and are ignored.
struct ParamState {
  Vector beta;             // p
  std::vector<Vector> b;   // m vectors of length q
  Matrix sigma_b;          // q x q
  double nu_b = 10.0;
  Vector lambda_b;         // m mixing weights, all 1 under the normal law

  double phi = 1.0;        // common precision, regression == false only

  Vector delta;            // p*
  std::vector<Vector> d;   // m vectors of length q*
  Matrix sigma_d;          // q* x q*
  double nu_d = 10.0;
  Vector lambda_d;         // m

  static ParamState sized(const ModelSpec& spec, int m);
};

struct ClampCounter {
  std::uint64_t mean_events = 0;
  std::uint64_t precision_events = 0;
  std::uint64_t total() const { return mean_events + precision_events; }
};

// eta = x'beta + z'b_i for observation j of group i
double linear_predictor_location(const ModelSpec& spec, const ParamState& state,
                                 const GroupedDataset& data, int i, int j);
// tau = w'delta + h'd_i; only valid when spec.precision.regression
double linear_predictor_precision(const ModelSpec& spec, const ParamState& state,
                                  const GroupedDataset& data, int i, int j);

// inverse logit, strictly inside (0,1) for every finite eta
double mean_response(double eta);
// exp(tau) with the argument clipped to +-700 so the result stays finite
double precision_response(double tau);

// phi for observation j of group i under either precision structure
double observation_precision(const ModelSpec& spec, const ParamState& state,
                             const GroupedDataset& data, int i, int j);

double group_log_likelihood(const ModelSpec& spec, const ParamState& state,
                            const GroupedDataset& data, int i,
                            ClampCounter* clamps = nullptr);
double log_likelihood(const ModelSpec& spec, const ParamState& state,
                      const GroupedDataset& data, ClampCounter* clamps = nullptr);

}  // namespace betamix
