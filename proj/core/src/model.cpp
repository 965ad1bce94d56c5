#include "betamix/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace betamix {

namespace {
constexpr double kMeanFloor = 1e-12;
constexpr double kTauLimit = 700.0;

double clamp_mean(double mu, ClampCounter* clamps) {
  if (mu < kMeanFloor) {
    if (clamps) ++clamps->mean_events;
    return kMeanFloor;
  }
  if (mu > 1.0 - kMeanFloor) {
    if (clamps) ++clamps->mean_events;
    return 1.0 - kMeanFloor;
  }
  return mu;
}
}  // namespace

void ModelSpec::validate() const {
  if (p < 1) throw SpecError("model: at least one location fixed effect required");
  if (q < 1) throw SpecError("model: at least one location random effect required");
  if (!precision.regression) {
    if (precision.p_star != 0 || precision.q_star != 0)
      throw SpecError("model: precision covariates given without a precision submodel");
  } else {
    if (precision.p_star < 0 || precision.q_star < 0)
      throw SpecError("model: negative precision design dimensions");
    if (precision.p_star + precision.q_star < 1)
      throw SpecError("model: empty precision submodel");
  }
  if (tie_random_scales) {
    if (!precision.regression || precision.q_star != q)
      throw SpecError(
          "model: tied random-effect scales need matching location/precision "
          "dimensions");
    if (b_law != d_law)
      throw SpecError("model: tied random-effect scales need matching laws");
  }
}

GroupedDataset::GroupedDataset(std::vector<Group> groups) : groups_(std::move(groups)) {
  if (groups_.empty()) throw DataError("dataset: no groups");
  x_dim_ = static_cast<int>(groups_.front().x_rows.empty()
                                ? 0
                                : groups_.front().x_rows.front().size());
  z_dim_ = static_cast<int>(groups_.front().z_rows.empty()
                                ? 0
                                : groups_.front().z_rows.front().size());
  w_dim_ = static_cast<int>(groups_.front().w_rows.empty()
                                ? 0
                                : groups_.front().w_rows.front().size());
  h_dim_ = static_cast<int>(groups_.front().h_rows.empty()
                                ? 0
                                : groups_.front().h_rows.front().size());
  for (const Group& g : groups_) {
    const size_t n = g.responses.size();
    if (n == 0) throw DataError("dataset: group '" + g.unit_id + "' is empty");
    auto check_block = [&](const std::vector<Vector>& rows, int dim, const char* name) {
      if (dim == 0) {
        if (!rows.empty())
          throw DataError("dataset: group '" + g.unit_id + "' has unexpected " +
                          name + " rows");
        return;
      }
      if (rows.size() != n)
        throw DataError("dataset: group '" + g.unit_id + "' has ragged " + name +
                        " rows");
      for (const Vector& r : rows) {
        if (r.size() != dim)
          throw DataError("dataset: group '" + g.unit_id + "' has inconsistent " +
                          name + " width");
        if (!r.allFinite())
          throw DataError("dataset: group '" + g.unit_id + "' has non-finite " +
                          name + " values");
      }
    };
    check_block(g.x_rows, x_dim_, "x");
    check_block(g.z_rows, z_dim_, "z");
    check_block(g.w_rows, w_dim_, "w");
    check_block(g.h_rows, h_dim_, "h");
    for (size_t j = 0; j < n; ++j) {
      const double y = g.responses[j];
      if (!(y > 0.0 && y < 1.0))
        throw DataError("dataset: response " + std::to_string(j + 1) + " of group '" +
                        g.unit_id + "' lies outside (0,1)");
    }
    n_total_ += static_cast<long>(n);
  }
  if (x_dim_ < 1) throw DataError("dataset: location design matrix is empty");
}

void GroupedDataset::check_compatible(const ModelSpec& spec) const {
  if (spec.p != x_dim_)
    throw DataError("dataset: location fixed design has width " +
                    std::to_string(x_dim_) + ", model expects " + std::to_string(spec.p));
  if (spec.q != z_dim_)
    throw DataError("dataset: location random design has width " +
                    std::to_string(z_dim_) + ", model expects " + std::to_string(spec.q));
  const int want_w = spec.precision.regression ? spec.precision.p_star : 0;
  const int want_h = spec.precision.regression ? spec.precision.q_star : 0;
  if (want_w != w_dim_)
    throw DataError("dataset: precision fixed design has width " +
                    std::to_string(w_dim_) + ", model expects " + std::to_string(want_w));
  if (want_h != h_dim_)
    throw DataError("dataset: precision random design has width " +
                    std::to_string(h_dim_) + ", model expects " + std::to_string(want_h));
}

ParamState ParamState::sized(const ModelSpec& spec, int m) {
  ParamState s;
  s.beta = Vector::Zero(spec.p);
  s.b.assign(static_cast<size_t>(m), Vector::Zero(spec.q));
  s.sigma_b = Matrix::Identity(spec.q, spec.q);
  s.lambda_b = Vector::Ones(m);
  const int ps = spec.precision.regression ? spec.precision.p_star : 0;
  const int qs = spec.precision.regression ? spec.precision.q_star : 0;
  s.delta = Vector::Zero(ps);
  s.d.assign(static_cast<size_t>(m), Vector::Zero(qs));
  s.sigma_d = Matrix::Identity(std::max(qs, 1), std::max(qs, 1));
  if (qs == 0) s.sigma_d.resize(0, 0);
  s.lambda_d = Vector::Ones(m);
  return s;
}

double mean_response(double eta) {
  const double small = 1.0 / (1.0 + std::exp(std::abs(eta)));
  double mu = eta >= 0.0 ? 1.0 - small : small;
  if (mu >= 1.0) mu = std::nextafter(1.0, 0.0);
  if (mu <= 0.0) mu = std::numeric_limits<double>::denorm_min();
  return mu;
}

double precision_response(double tau) {
  return std::exp(std::clamp(tau, -kTauLimit, kTauLimit));
}

double linear_predictor_location(const ModelSpec& spec, const ParamState& state,
                                 const GroupedDataset& data, int i, int j) {
  const Group& g = data.group(i);
  double eta = state.beta.dot(g.x_rows[static_cast<size_t>(j)]);
  if (spec.q > 0) eta += state.b[static_cast<size_t>(i)].dot(g.z_rows[static_cast<size_t>(j)]);
  return eta;
}

double linear_predictor_precision(const ModelSpec& spec, const ParamState& state,
                                  const GroupedDataset& data, int i, int j) {
  const Group& g = data.group(i);
  double tau = 0.0;
  if (spec.precision.p_star > 0) tau += state.delta.dot(g.w_rows[static_cast<size_t>(j)]);
  if (spec.precision.q_star > 0)
    tau += state.d[static_cast<size_t>(i)].dot(g.h_rows[static_cast<size_t>(j)]);
  return tau;
}

double observation_precision(const ModelSpec& spec, const ParamState& state,
                             const GroupedDataset& data, int i, int j) {
  if (!spec.precision.regression) return state.phi;
  return precision_response(linear_predictor_precision(spec, state, data, i, j));
}

double group_log_likelihood(const ModelSpec& spec, const ParamState& state,
                            const GroupedDataset& data, int i, ClampCounter* clamps) {
  const Group& g = data.group(i);
  double total = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    const double mu = clamp_mean(
        mean_response(linear_predictor_location(spec, state, data, i, j)), clamps);
    double phi = state.phi;
    if (spec.precision.regression) {
      const double tau = linear_predictor_precision(spec, state, data, i, j);
      if (std::abs(tau) > kTauLimit && clamps) ++clamps->precision_events;
      phi = precision_response(tau);
    }
    total += beta_mp_log_pdf(g.responses[static_cast<size_t>(j)], BetaMP(mu, phi));
  }
  return total;
}

double log_likelihood(const ModelSpec& spec, const ParamState& state,
                      const GroupedDataset& data, ClampCounter* clamps) {
  double total = 0.0;
  for (int i = 0; i < data.m(); ++i)
    total += group_log_likelihood(spec, state, data, i, clamps);
  return total;
}

}  // namespace betamix
