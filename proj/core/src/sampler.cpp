#include "betamix/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace betamix {

namespace {

constexpr double kLogStepMin = -15.0;
constexpr double kLogStepMax = 10.0;

double logit(double y) { return std::log(y / (1.0 - y)); }

Matrix safe_spd(const Matrix& m) {
  if (is_spd(m)) return 0.5 * (m + m.transpose());
  return nearest_spd(m, 1e-8);
}

// zero-mean normal with covariance sigma/lambda, factor precomputed
double scaled_gaussian_log_pdf(const Vector& x, const Eigen::LLT<Matrix>& sigma_llt,
                               double log_det_sigma, double lambda) {
  const int q = static_cast<int>(x.size());
  const double quad = lambda * x.dot(sigma_llt.solve(x));
  return -0.5 * q * std::log(2.0 * std::numbers::pi) -
         0.5 * (log_det_sigma - q * std::log(lambda)) - 0.5 * quad;
}

double llt_log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

// keep a starting phi strictly inside the support of its prior
double pull_into_support(const PhiPrior& prior, double phi) {
  phi = std::clamp(phi, 1e-3, 1e8);
  struct Visitor {
    double phi;
    double operator()(const InverseGammaPhiPrior&) const { return phi; }
    double operator()(const UniformSquaredPhiPrior& p) const {
      return std::min(phi, 0.8 * p.a * p.a);
    }
    double operator()(const ScaledBetaSquaredPhiPrior& p) const {
      return std::min(phi, 0.8 * p.a * p.a);
    }
    double operator()(const LogTPhiPrior&) const { return phi; }
  };
  return std::visit(Visitor{phi}, prior);
}

}  // namespace

void SamplerConfig::validate() const {
  if (iterations < 2) throw SpecError("sampler: iterations must be at least 2");
  if (burn_in < 0 || burn_in >= iterations)
    throw SpecError("sampler: burn_in must lie in [0, iterations)");
  if (thin < 1) throw SpecError("sampler: thin must be at least 1");
  if (chains < 1) throw SpecError("sampler: chains must be at least 1");
  if (adapt_window < 10) throw SpecError("sampler: adapt_window must be at least 10");
  if (!(target_accept_scalar > 0.0 && target_accept_scalar < 1.0) ||
      !(target_accept_vector > 0.0 && target_accept_vector < 1.0))
    throw SpecError("sampler: target acceptance rates must lie in (0,1)");
}

// ---------------------------------------------------------------------------

AdaptiveBlock::AdaptiveBlock(int dim, double target_rate, long adapt_window,
                             Matrix init_cov)
    : dim_(dim), target_(target_rate), window_(std::max(adapt_window, 10L)) {
  ring_.reserve(static_cast<size_t>(window_));
  log_step_ = std::log(2.38 / std::sqrt(static_cast<double>(dim)));
  if (init_cov.rows() != dim || init_cov.cols() != dim) init_cov = Matrix::Identity(dim, dim);
  set_covariance(init_cov);
}

void AdaptiveBlock::set_covariance(const Matrix& cov) {
  Matrix c = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    c = nearest_spd(c, 1e-8);
    llt.compute(c);
  }
  cov_ = c;
  chol_ = llt.matrixL();
}

Vector AdaptiveBlock::propose(const Vector& current, Rng& rng) const {
  Vector z(dim_);
  for (int i = 0; i < dim_; ++i) z[i] = rng.normal();
  return current + std::exp(log_step_) * (chol_ * z);
}

void AdaptiveBlock::record(const Vector& state_after_update, bool accepted) {
  ++proposals_;
  if (frozen_) {
    ++pf_proposals_;
    if (accepted) ++pf_accepts_;
    return;
  }
  // Robbins-Monro step toward the target rate; the gain decays so adaptation
  // diminishes even if freeze() were never called
  const double gain = std::pow(static_cast<double>(proposals_), -0.6);
  log_step_ += gain * ((accepted ? 1.0 : 0.0) - target_);
  log_step_ = std::clamp(log_step_, kLogStepMin, kLogStepMax);

  if (ring_.size() < static_cast<size_t>(window_)) {
    ring_.push_back(state_after_update);
  } else {
    ring_[ring_pos_] = state_after_update;
    ring_pos_ = (ring_pos_ + 1) % ring_.size();
  }
  ++records_;
  if (records_ >= 2 * dim_ + 10 && records_ % 100 == 0) refresh_covariance();
}

void AdaptiveBlock::refresh_covariance() {
  const size_t s = ring_.size();
  if (s < static_cast<size_t>(2 * dim_ + 2)) return;
  Vector mean = Vector::Zero(dim_);
  for (const Vector& v : ring_) mean += v;
  mean /= static_cast<double>(s);
  Matrix cov = Matrix::Zero(dim_, dim_);
  for (const Vector& v : ring_) {
    const Vector c = v - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(s - 1);
  cov += 1e-6 * Matrix::Identity(dim_, dim_);
  set_covariance(cov);
}

void AdaptiveBlock::freeze() { frozen_ = true; }

// ---------------------------------------------------------------------------
// flattened parameter order: beta, phi | delta, Sigma_b (upper incl diag),
// nu_b, [Sigma_d, nu_d], b, d, lambda_b, lambda_d

std::vector<std::string> parameter_names(const ModelSpec& spec, int m) {
  std::vector<std::string> names;
  for (int k = 1; k <= spec.p; ++k) names.push_back("beta." + std::to_string(k));
  if (!spec.precision.regression) {
    names.push_back("phi");
  } else {
    for (int k = 1; k <= spec.precision.p_star; ++k)
      names.push_back("delta." + std::to_string(k));
  }
  for (int r = 1; r <= spec.q; ++r)
    for (int c = r; c <= spec.q; ++c)
      names.push_back("Sigma_b." + std::to_string(r) + "." + std::to_string(c));
  const bool b_t = spec.b_law == RandomEffectLaw::StudentT;
  if (b_t) names.push_back("nu_b");
  const int qs = spec.precision.regression ? spec.precision.q_star : 0;
  const bool d_t = spec.d_law == RandomEffectLaw::StudentT;
  if (qs > 0 && !spec.tie_random_scales) {
    for (int r = 1; r <= qs; ++r)
      for (int c = r; c <= qs; ++c)
        names.push_back("Sigma_d." + std::to_string(r) + "." + std::to_string(c));
    if (d_t) names.push_back("nu_d");
  }
  for (int i = 1; i <= m; ++i)
    for (int k = 1; k <= spec.q; ++k)
      names.push_back("b." + std::to_string(i) + "." + std::to_string(k));
  for (int i = 1; i <= m && qs > 0; ++i)
    for (int k = 1; k <= qs; ++k)
      names.push_back("d." + std::to_string(i) + "." + std::to_string(k));
  if (b_t)
    for (int i = 1; i <= m; ++i) names.push_back("lambda_b." + std::to_string(i));
  if (qs > 0 && d_t)
    for (int i = 1; i <= m; ++i) names.push_back("lambda_d." + std::to_string(i));
  return names;
}

Vector flatten_state(const ModelSpec& spec, const ParamState& state) {
  const int m = static_cast<int>(state.b.size());
  std::vector<double> out;
  for (int k = 0; k < spec.p; ++k) out.push_back(state.beta[k]);
  if (!spec.precision.regression) {
    out.push_back(state.phi);
  } else {
    for (int k = 0; k < spec.precision.p_star; ++k) out.push_back(state.delta[k]);
  }
  for (int r = 0; r < spec.q; ++r)
    for (int c = r; c < spec.q; ++c) out.push_back(state.sigma_b(r, c));
  const bool b_t = spec.b_law == RandomEffectLaw::StudentT;
  if (b_t) out.push_back(state.nu_b);
  const int qs = spec.precision.regression ? spec.precision.q_star : 0;
  const bool d_t = spec.d_law == RandomEffectLaw::StudentT;
  if (qs > 0 && !spec.tie_random_scales) {
    for (int r = 0; r < qs; ++r)
      for (int c = r; c < qs; ++c) out.push_back(state.sigma_d(r, c));
    if (d_t) out.push_back(state.nu_d);
  }
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < spec.q; ++k) out.push_back(state.b[static_cast<size_t>(i)][k]);
  if (qs > 0)
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < qs; ++k) out.push_back(state.d[static_cast<size_t>(i)][k]);
  if (b_t)
    for (int i = 0; i < m; ++i) out.push_back(state.lambda_b[i]);
  if (qs > 0 && d_t)
    for (int i = 0; i < m; ++i) out.push_back(state.lambda_d[i]);
  return Eigen::Map<Vector>(out.data(), static_cast<long>(out.size()));
}

ParamState unflatten_state(const ModelSpec& spec, int m, const Vector& values) {
  ParamState s = ParamState::sized(spec, m);
  long pos = 0;
  auto next = [&]() { return values[pos++]; };
  for (int k = 0; k < spec.p; ++k) s.beta[k] = next();
  if (!spec.precision.regression) {
    s.phi = next();
  } else {
    for (int k = 0; k < spec.precision.p_star; ++k) s.delta[k] = next();
  }
  for (int r = 0; r < spec.q; ++r)
    for (int c = r; c < spec.q; ++c) {
      s.sigma_b(r, c) = s.sigma_b(c, r) = next();
    }
  const bool b_t = spec.b_law == RandomEffectLaw::StudentT;
  if (b_t) s.nu_b = next();
  const int qs = spec.precision.regression ? spec.precision.q_star : 0;
  const bool d_t = spec.d_law == RandomEffectLaw::StudentT;
  if (qs > 0 && !spec.tie_random_scales) {
    for (int r = 0; r < qs; ++r)
      for (int c = r; c < qs; ++c) {
        s.sigma_d(r, c) = s.sigma_d(c, r) = next();
      }
    if (d_t) s.nu_d = next();
  }
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < spec.q; ++k) s.b[static_cast<size_t>(i)][k] = next();
  if (qs > 0)
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < qs; ++k) s.d[static_cast<size_t>(i)][k] = next();
  if (b_t)
    for (int i = 0; i < m; ++i) s.lambda_b[i] = next();
  if (qs > 0 && d_t)
    for (int i = 0; i < m; ++i) s.lambda_d[i] = next();
  if (pos != values.size())
    throw std::invalid_argument("unflatten_state: length mismatch");
  return s;
}

namespace {
void append_log_chol(const Matrix& sigma, std::vector<double>& out) {
  Eigen::LLT<Matrix> llt(safe_spd(sigma));
  Matrix l = llt.matrixL();
  for (int c = 0; c < l.cols(); ++c)
    for (int r = c; r < l.rows(); ++r)
      out.push_back(r == c ? std::log(l(r, c)) : l(r, c));
}
}  // namespace

Vector mpsrf_coordinates(const ModelSpec& spec, const ParamState& state) {
  std::vector<double> out;
  for (int k = 0; k < spec.p; ++k) out.push_back(state.beta[k]);
  if (!spec.precision.regression) {
    out.push_back(std::log(state.phi));
  } else {
    for (int k = 0; k < spec.precision.p_star; ++k) out.push_back(state.delta[k]);
  }
  append_log_chol(state.sigma_b, out);
  if (spec.b_law == RandomEffectLaw::StudentT) out.push_back(std::log(state.nu_b));
  const int qs = spec.precision.regression ? spec.precision.q_star : 0;
  if (qs > 0 && !spec.tie_random_scales) {
    append_log_chol(state.sigma_d, out);
    if (spec.d_law == RandomEffectLaw::StudentT) out.push_back(std::log(state.nu_d));
  }
  return Eigen::Map<Vector>(out.data(), static_cast<long>(out.size()));
}

// ---------------------------------------------------------------------------

Matrix conjugate_sigma_draw(const Matrix& psi, double dof,
                            const std::vector<Vector>& effects, const Vector& lambdas,
                            Rng& rng) {
  if (static_cast<long>(effects.size()) != lambdas.size())
    throw std::invalid_argument("conjugate_sigma_draw: effect/weight count mismatch");
  Matrix scale = psi;
  for (size_t k = 0; k < effects.size(); ++k)
    scale.noalias() += lambdas[static_cast<long>(k)] * effects[k] * effects[k].transpose();
  scale = 0.5 * (scale + scale.transpose());
  return inv_wishart_sample(InvWishart(scale, dof + static_cast<double>(effects.size())),
                            rng);
}

double conjugate_lambda_draw(double nu, int dim, double quad, Rng& rng) {
  if (!(nu > 0.0) || dim < 1 || !(quad >= 0.0))
    throw std::invalid_argument("conjugate_lambda_draw: bad arguments");
  return rng.gamma(0.5 * (nu + dim), 0.5 * (nu + quad));
}

// ---------------------------------------------------------------------------

ParamState initial_state(const ModelSpec& spec, const PriorCatalog& catalog,
                         const GroupedDataset& data, int chain_index, Rng& rng) {
  const int m = data.m();
  ParamState s = ParamState::sized(spec, m);

  // pooled least squares on the logit scale
  Matrix gram = 1e-8 * Matrix::Identity(spec.p, spec.p);
  Vector moment = Vector::Zero(spec.p);
  for (const Group& g : data.groups())
    for (size_t j = 0; j < g.responses.size(); ++j) {
      gram.noalias() += g.x_rows[j] * g.x_rows[j].transpose();
      moment.noalias() += g.x_rows[j] * logit(g.responses[j]);
    }
  s.beta = gram.ldlt().solve(moment);

  // logit-scale residual variance sizes the chain jitter below
  double rss = 0.0;
  long n_res = 0;
  for (const Group& g : data.groups())
    for (size_t j = 0; j < g.responses.size(); ++j) {
      const double r = logit(g.responses[j]) - g.x_rows[j].dot(s.beta);
      rss += r * r;
      ++n_res;
    }
  const double resid_var =
      std::max(rss / static_cast<double>(std::max<long>(n_res - spec.p, 1)), 1e-4);
  Matrix delta_gram_inv;

  // moment starting value for the precision
  double ss = 0.0, vsum = 0.0;
  long n = 0;
  ParamState fitted = s;
  for (int i = 0; i < m; ++i) {
    const Group& g = data.group(i);
    for (int j = 0; j < g.size(); ++j) {
      const double mu = mean_response(linear_predictor_location(spec, fitted, data, i, j));
      const double r = g.responses[static_cast<size_t>(j)] - mu;
      ss += r * r;
      vsum += mu * (1.0 - mu);
      ++n;
    }
  }
  double phi0 = 10.0;
  if (ss > 0.0) phi0 = std::clamp(vsum / ss - 1.0, 0.5, 1e4);

  s.sigma_b = catalog.psi_b / std::max(catalog.c_b - spec.q - 1.0, 1.0);
  s.nu_b = 10.0;
  if (!spec.precision.regression) {
    s.phi = pull_into_support(*catalog.phi_prior, phi0);
  } else {
    const int ps = spec.precision.p_star;
    if (ps > 0) {
      Matrix wg = 1e-8 * Matrix::Identity(ps, ps);
      Vector wm = Vector::Zero(ps);
      for (const Group& g : data.groups())
        for (const Vector& w : g.w_rows) {
          wg.noalias() += w * w.transpose();
          wm.noalias() += w * std::log(phi0);
        }
      s.delta = wg.ldlt().solve(wm);
      delta_gram_inv = wg.ldlt().solve(Matrix::Identity(ps, ps));
    }
    const int qs = spec.precision.q_star;
    if (qs > 0) {
      if (spec.tie_random_scales)
        s.sigma_d = s.sigma_b;
      else
        s.sigma_d = *catalog.psi_d / std::max(catalog.c_d - qs - 1.0, 1.0);
      s.nu_d = 10.0;
    }
  }

  // over-disperse every chain but the first so shrink factors mean something;
  // coefficient jitter follows the design Gram ellipse, so collinear and
  // slope-scale coordinates co-move and fitted values stay a bounded distance
  // from the pooled fit
  if (chain_index > 0) {
    Eigen::LLT<Matrix> bl(
        safe_spd(resid_var * gram.ldlt().solve(Matrix::Identity(spec.p, spec.p))));
    Vector zb(spec.p);
    for (int k = 0; k < spec.p; ++k) zb[k] = rng.normal();
    const Vector beta_step = bl.matrixL() * zb;
    s.beta += 4.0 * beta_step;
    if (!spec.precision.regression) {
      s.phi = pull_into_support(*catalog.phi_prior, s.phi * std::exp(0.5 * rng.normal()));
    } else if (spec.precision.p_star > 0) {
      Eigen::LLT<Matrix> dl(safe_spd(2.0 * delta_gram_inv));
      Vector zd(spec.precision.p_star);
      for (int k = 0; k < spec.precision.p_star; ++k) zd[k] = rng.normal();
      const Vector delta_step = dl.matrixL() * zd;
      s.delta += 4.0 * delta_step;
    }
    s.sigma_b *= std::exp(0.4 * rng.normal());
    const double lo = catalog.nu_above_two ? 2.1 : 0.5;
    s.nu_b = std::clamp(s.nu_b * std::exp(0.4 * rng.normal()), lo, 200.0);
    if (spec.has_d() && !spec.tie_random_scales) {
      s.sigma_d *= std::exp(0.4 * rng.normal());
      s.nu_d = std::clamp(s.nu_d * std::exp(0.4 * rng.normal()), lo, 200.0);
    } else if (spec.has_d()) {
      s.sigma_d = s.sigma_b;
    }
  }

  const double lp = log_prior(catalog, spec, s);
  if (!std::isfinite(lp))
    throw SamplerError("initial state has non-finite log prior");
  const double ll = log_likelihood(spec, s, data);
  if (!std::isfinite(ll))
    throw SamplerError("initial state has non-finite log likelihood");
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct PrecomputedFactor {
  Eigen::LLT<Matrix> llt;
  double log_det = 0.0;

  void compute(const Matrix& sigma) {
    llt.compute(safe_spd(sigma));
    log_det = llt_log_det(llt);
  }
};

class ChainRunner {
 public:
  ChainRunner(const ModelSpec& spec, const PriorCatalog& catalog,
              const GroupedDataset& data, const SamplerConfig& cfg, int chain_index,
              const ParamState* initial_override)
      : spec_(spec),
        catalog_(catalog),
        data_(data),
        cfg_(cfg),
        chain_seed_(split_seed(cfg.seed, static_cast<std::uint64_t>(chain_index))),
        rng_(chain_seed_),
        chain_index_(chain_index) {
    state_ = initial_override ? *initial_override
                              : initial_state(spec, catalog, data, chain_index, rng_);
    group_ll_.assign(static_cast<size_t>(data.m()), 0.0);
    scratch_ll_.assign(static_cast<size_t>(data.m()), 0.0);
    refresh_likelihood();
    build_blocks();
    sigma_b_fac_.compute(state_.sigma_b);
    if (untied_d()) sigma_d_fac_.compute(state_.sigma_d);
  }

  Trace run() {
    Trace trace;
    trace.chain_index = chain_index_;
    trace.seed = chain_seed_;
    const long retained = cfg_.retained_per_chain();
    const long dim = static_cast<long>(parameter_names(spec_, data_.m()).size());
    trace.draws.resize(0, 0);
    Matrix draws(retained, dim);
    trace.deviance.reserve(static_cast<size_t>(retained));
    long row = 0;
    for (long t = 0; t < cfg_.iterations; ++t) {
      if (t == cfg_.burn_in) freeze_all();
      sweep();
      if (t >= cfg_.burn_in && (t - cfg_.burn_in) % cfg_.thin == 0) {
        draws.row(row++) = flatten_state(spec_, state_).transpose();
        trace.deviance.push_back(cfg_.likelihood_enabled
                                     ? -2.0 * total_ll_
                                     : -2.0 * log_likelihood(spec_, state_, data_));
      }
    }
    trace.draws = std::move(draws);
    collect_stats(trace);
    trace.clamps = clamps_;
    if (retained < 100)
      trace.warning = "fewer than 100 retained draws per chain; diagnostics will be noisy";
    return trace;
  }

 private:
  bool untied_d() const { return spec_.has_d() && !spec_.tie_random_scales; }
  bool b_is_t() const { return spec_.b_law == RandomEffectLaw::StudentT; }
  bool d_is_t() const { return spec_.d_law == RandomEffectLaw::StudentT; }
  bool frozen(const char* name) const { return cfg_.frozen_blocks.count(name) > 0; }

  void refresh_likelihood() {
    total_ll_ = 0.0;
    for (int i = 0; i < data_.m(); ++i) {
      group_ll_[static_cast<size_t>(i)] =
          cfg_.likelihood_enabled
              ? group_log_likelihood(spec_, state_, data_, i, &clamps_)
              : 0.0;
      total_ll_ += group_ll_[static_cast<size_t>(i)];
    }
  }

  void build_blocks() {
    const int m = data_.m();
    const double tv = cfg_.target_accept_vector;
    const double ts = cfg_.target_accept_scalar;
    auto target = [&](int dim) { return dim > 1 ? tv : ts; };

    // beta proposal starts at the logit-scale least squares covariance shape;
    // with strongly collinear designs adaptation alone takes too long to find it
    Matrix gram = 1e-8 * Matrix::Identity(spec_.p, spec_.p);
    for (const Group& g : data_.groups())
      for (const Vector& x : g.x_rows) gram.noalias() += x * x.transpose();
    Matrix beta_cov = gram.ldlt().solve(Matrix::Identity(spec_.p, spec_.p));
    beta_block_.emplace_back(spec_.p, target(spec_.p), cfg_.adapt_window,
                             safe_spd(beta_cov));

    for (int i = 0; i < m; ++i)
      b_blocks_.emplace_back(spec_.q, target(spec_.q), cfg_.adapt_window,
                             Matrix(0.25 * Matrix::Identity(spec_.q, spec_.q)));
    if (!spec_.precision.regression) {
      phi_block_.emplace_back(1, ts, cfg_.adapt_window, Matrix(0.04 * Matrix::Identity(1, 1)));
    } else {
      const int ps = spec_.precision.p_star;
      if (ps > 0) {
        Matrix wgram = 1e-8 * Matrix::Identity(ps, ps);
        for (const Group& g : data_.groups())
          for (const Vector& w : g.w_rows) wgram.noalias() += w * w.transpose();
        Matrix delta_cov = wgram.ldlt().solve(Matrix::Identity(ps, ps));
        delta_block_.emplace_back(ps, target(ps), cfg_.adapt_window, safe_spd(delta_cov));
      }
      for (int i = 0; i < m && spec_.precision.q_star > 0; ++i)
        d_blocks_.emplace_back(spec_.precision.q_star, target(spec_.precision.q_star),
                               cfg_.adapt_window,
                               Matrix(0.25 * Matrix::Identity(spec_.precision.q_star,
                                                              spec_.precision.q_star)));
    }
    if (b_is_t())
      nu_b_block_.emplace_back(1, ts, cfg_.adapt_window, Matrix(0.09 * Matrix::Identity(1, 1)));
    if (untied_d() && d_is_t())
      nu_d_block_.emplace_back(1, ts, cfg_.adapt_window, Matrix(0.09 * Matrix::Identity(1, 1)));
  }

  void freeze_all() {
    for (auto& b : beta_block_) b.freeze();
    for (auto& b : b_blocks_) b.freeze();
    for (auto& b : phi_block_) b.freeze();
    for (auto& b : delta_block_) b.freeze();
    for (auto& b : d_blocks_) b.freeze();
    for (auto& b : nu_b_block_) b.freeze();
    for (auto& b : nu_d_block_) b.freeze();
  }

  double candidate_total_ll() {
    double total = 0.0;
    for (int i = 0; i < data_.m(); ++i) {
      scratch_ll_[static_cast<size_t>(i)] =
          group_log_likelihood(spec_, state_, data_, i, &clamps_);
      total += scratch_ll_[static_cast<size_t>(i)];
    }
    return total;
  }

  bool mh_accept(double log_alpha) {
    if (std::isnan(log_alpha)) return false;
    if (log_alpha >= 0.0) return true;
    return std::log(rng_.uniform()) < log_alpha;
  }

  void update_beta() {
    if (frozen("beta")) return;
    AdaptiveBlock& block = beta_block_.front();
    const Vector prop = block.propose(state_.beta, rng_);
    const Vector old = state_.beta;
    const double prior_old = fixed_effect_log_prior(catalog_.beta_prior, old);
    const double prior_new = fixed_effect_log_prior(catalog_.beta_prior, prop);
    state_.beta = prop;
    double cand_ll = total_ll_;
    if (cfg_.likelihood_enabled) cand_ll = candidate_total_ll();
    const double log_alpha = (cand_ll - total_ll_) + (prior_new - prior_old);
    const bool accepted = mh_accept(log_alpha);
    if (accepted) {
      total_ll_ = cand_ll;
      if (cfg_.likelihood_enabled) group_ll_.swap(scratch_ll_);
    } else {
      state_.beta = old;
    }
    block.record(state_.beta, accepted);
  }

  void update_b(int i) {
    AdaptiveBlock& block = b_blocks_[static_cast<size_t>(i)];
    Vector& bi = state_.b[static_cast<size_t>(i)];
    const Vector prop = block.propose(bi, rng_);
    const Vector old = bi;
    const double lam = state_.lambda_b[i];
    const double prior_old =
        scaled_gaussian_log_pdf(old, sigma_b_fac_.llt, sigma_b_fac_.log_det, lam);
    const double prior_new =
        scaled_gaussian_log_pdf(prop, sigma_b_fac_.llt, sigma_b_fac_.log_det, lam);
    bi = prop;
    double cand = 0.0;
    const double cur = group_ll_[static_cast<size_t>(i)];
    if (cfg_.likelihood_enabled)
      cand = group_log_likelihood(spec_, state_, data_, i, &clamps_);
    const double log_alpha = (cand - cur) + (prior_new - prior_old);
    const bool accepted = mh_accept(log_alpha);
    if (accepted) {
      group_ll_[static_cast<size_t>(i)] = cand;
      total_ll_ += cand - cur;
    } else {
      bi = old;
    }
    block.record(bi, accepted);
  }

  void update_sigma_b() {
    if (frozen("sigma_b")) return;
    std::vector<Vector> effects = state_.b;
    Vector lambdas = state_.lambda_b;
    if (spec_.tie_random_scales) {
      effects.insert(effects.end(), state_.d.begin(), state_.d.end());
      Vector both(2 * lambdas.size());
      both << state_.lambda_b, state_.lambda_d;
      lambdas = both;
    }
    state_.sigma_b = conjugate_sigma_draw(catalog_.psi_b, catalog_.c_b, effects, lambdas, rng_);
    sigma_b_fac_.compute(state_.sigma_b);
  }

  void update_lambda_b() {
    if (frozen("lambda_b")) return;
    for (int i = 0; i < data_.m(); ++i) {
      const Vector& bi = state_.b[static_cast<size_t>(i)];
      const double quad = bi.dot(sigma_b_fac_.llt.solve(bi));
      state_.lambda_b[i] = conjugate_lambda_draw(state_.nu_b, spec_.q, quad, rng_);
    }
  }

  void update_nu(AdaptiveBlock& block, double& nu, const std::vector<const Vector*>& weight_sets) {
    Vector cur(1);
    cur[0] = std::log(nu);
    const Vector prop = block.propose(cur, rng_);
    const double nu_new = std::exp(prop[0]);
    double log_alpha = nu_log_prior(nu_new, catalog_.nu_rate, catalog_.nu_above_two) -
                       nu_log_prior(nu, catalog_.nu_rate, catalog_.nu_above_two) +
                       (prop[0] - cur[0]);
    if (std::isfinite(log_alpha)) {
      for (const Vector* lams : weight_sets)
        for (long i = 0; i < lams->size(); ++i) {
          const double lam = (*lams)[i];
          log_alpha += gamma_log_pdf(lam, 0.5 * nu_new, 0.5 * nu_new) -
                       gamma_log_pdf(lam, 0.5 * nu, 0.5 * nu);
        }
    }
    const bool accepted = mh_accept(log_alpha);
    if (accepted) nu = nu_new;
    Vector after(1);
    after[0] = std::log(nu);
    block.record(after, accepted);
  }

  void update_phi() {
    if (frozen("phi")) return;
    AdaptiveBlock& block = phi_block_.front();
    Vector cur(1);
    cur[0] = std::log(state_.phi);
    const Vector prop = block.propose(cur, rng_);
    const double phi_new = std::exp(prop[0]);
    const double old_phi = state_.phi;
    const double prior_term = phi_log_prior(*catalog_.phi_prior, phi_new) -
                              phi_log_prior(*catalog_.phi_prior, old_phi);
    double log_alpha = prior_term + (prop[0] - cur[0]);
    double cand_ll = total_ll_;
    if (std::isfinite(log_alpha) && cfg_.likelihood_enabled) {
      state_.phi = phi_new;
      cand_ll = candidate_total_ll();
      state_.phi = old_phi;
      log_alpha += cand_ll - total_ll_;
    }
    const bool accepted = mh_accept(log_alpha);
    if (accepted) {
      state_.phi = phi_new;
      total_ll_ = cand_ll;
      if (cfg_.likelihood_enabled) group_ll_.swap(scratch_ll_);
    }
    Vector after(1);
    after[0] = std::log(state_.phi);
    block.record(after, accepted);
  }

  void update_delta() {
    if (frozen("delta")) return;
    AdaptiveBlock& block = delta_block_.front();
    const Vector prop = block.propose(state_.delta, rng_);
    const Vector old = state_.delta;
    const double prior_old = fixed_effect_log_prior(*catalog_.delta_prior, old);
    const double prior_new = fixed_effect_log_prior(*catalog_.delta_prior, prop);
    state_.delta = prop;
    double cand_ll = total_ll_;
    if (cfg_.likelihood_enabled) cand_ll = candidate_total_ll();
    const double log_alpha = (cand_ll - total_ll_) + (prior_new - prior_old);
    const bool accepted = mh_accept(log_alpha);
    if (accepted) {
      total_ll_ = cand_ll;
      if (cfg_.likelihood_enabled) group_ll_.swap(scratch_ll_);
    } else {
      state_.delta = old;
    }
    block.record(state_.delta, accepted);
  }

  void update_d(int i) {
    AdaptiveBlock& block = d_blocks_[static_cast<size_t>(i)];
    Vector& di = state_.d[static_cast<size_t>(i)];
    const PrecomputedFactor& fac = spec_.tie_random_scales ? sigma_b_fac_ : sigma_d_fac_;
    const Vector prop = block.propose(di, rng_);
    const Vector old = di;
    const double lam = state_.lambda_d[i];
    const double prior_old = scaled_gaussian_log_pdf(old, fac.llt, fac.log_det, lam);
    const double prior_new = scaled_gaussian_log_pdf(prop, fac.llt, fac.log_det, lam);
    di = prop;
    double cand = 0.0;
    const double cur = group_ll_[static_cast<size_t>(i)];
    if (cfg_.likelihood_enabled)
      cand = group_log_likelihood(spec_, state_, data_, i, &clamps_);
    const double log_alpha = (cand - cur) + (prior_new - prior_old);
    const bool accepted = mh_accept(log_alpha);
    if (accepted) {
      group_ll_[static_cast<size_t>(i)] = cand;
      total_ll_ += cand - cur;
    } else {
      di = old;
    }
    block.record(di, accepted);
  }

  void update_sigma_d() {
    if (frozen("sigma_d")) return;
    state_.sigma_d =
        conjugate_sigma_draw(*catalog_.psi_d, catalog_.c_d, state_.d, state_.lambda_d, rng_);
    sigma_d_fac_.compute(state_.sigma_d);
  }

  void update_lambda_d() {
    if (frozen("lambda_d")) return;
    const PrecomputedFactor& fac = spec_.tie_random_scales ? sigma_b_fac_ : sigma_d_fac_;
    const double nu = spec_.tie_random_scales ? state_.nu_b : state_.nu_d;
    for (int i = 0; i < data_.m(); ++i) {
      const Vector& di = state_.d[static_cast<size_t>(i)];
      const double quad = di.dot(fac.llt.solve(di));
      state_.lambda_d[i] =
          conjugate_lambda_draw(nu, spec_.precision.q_star, quad, rng_);
    }
  }

  void sweep() {
    update_beta();
    if (!frozen("b"))
      for (int i = 0; i < data_.m(); ++i) update_b(i);
    update_sigma_b();
    if (b_is_t()) {
      update_lambda_b();
      if (!frozen("nu_b")) {
        std::vector<const Vector*> sets{&state_.lambda_b};
        if (spec_.tie_random_scales && d_is_t()) sets.push_back(&state_.lambda_d);
        update_nu(nu_b_block_.front(), state_.nu_b, sets);
      }
    }
    if (!spec_.precision.regression) {
      update_phi();
      return;
    }
    if (spec_.precision.p_star > 0) update_delta();
    if (spec_.precision.q_star > 0) {
      if (!frozen("d"))
        for (int i = 0; i < data_.m(); ++i) update_d(i);
      if (!spec_.tie_random_scales) update_sigma_d();
      if (d_is_t()) {
        update_lambda_d();
        if (!spec_.tie_random_scales && !frozen("nu_d")) {
          std::vector<const Vector*> sets{&state_.lambda_d};
          update_nu(nu_d_block_.front(), state_.nu_d, sets);
        }
      }
    }
  }

  static void merge(Trace& trace, const std::string& name, const AdaptiveBlock& b) {
    BlockStats& s = trace.acceptance[name];
    s.proposals += b.post_freeze_proposals();
    s.accepts += b.post_freeze_accepts();
  }

  void collect_stats(Trace& trace) const {
    for (const auto& b : beta_block_) merge(trace, "beta", b);
    for (const auto& b : b_blocks_) merge(trace, "b", b);
    for (const auto& b : phi_block_) merge(trace, "phi", b);
    for (const auto& b : delta_block_) merge(trace, "delta", b);
    for (const auto& b : d_blocks_) merge(trace, "d", b);
    for (const auto& b : nu_b_block_) merge(trace, "nu_b", b);
    for (const auto& b : nu_d_block_) merge(trace, "nu_d", b);
  }

  const ModelSpec& spec_;
  const PriorCatalog& catalog_;
  const GroupedDataset& data_;
  const SamplerConfig& cfg_;
  std::uint64_t chain_seed_;
  Rng rng_;
  int chain_index_;
  ParamState state_;
  std::vector<double> group_ll_, scratch_ll_;
  double total_ll_ = 0.0;
  ClampCounter clamps_;
  PrecomputedFactor sigma_b_fac_, sigma_d_fac_;
  // single-element vectors keep optional blocks without default construction
  std::vector<AdaptiveBlock> beta_block_, phi_block_, delta_block_, nu_b_block_, nu_d_block_;
  std::vector<AdaptiveBlock> b_blocks_, d_blocks_;
};

}  // namespace

Trace run_chain(const ModelSpec& spec, const PriorCatalog& catalog,
                const GroupedDataset& data, const SamplerConfig& config, int chain_index,
                const ParamState* initial_override) {
  spec.validate();
  config.validate();
  catalog.validate(spec);
  data.check_compatible(spec);
  ChainRunner runner(spec, catalog, data, config, chain_index, initial_override);
  return runner.run();
}

std::vector<Trace> run_ensemble(const ModelSpec& spec, const PriorCatalog& catalog,
                                const GroupedDataset& data, const SamplerConfig& config,
                                const std::vector<ParamState>* initial_overrides) {
  spec.validate();
  config.validate();
  catalog.validate(spec);
  data.check_compatible(spec);
  if (initial_overrides && static_cast<int>(initial_overrides->size()) != config.chains)
    throw SpecError("run_ensemble: one initial state per chain required");

  std::vector<Trace> traces(static_cast<size_t>(config.chains));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(config.chains));
  auto work = [&](int c) {
    try {
      const ParamState* init =
          initial_overrides ? &(*initial_overrides)[static_cast<size_t>(c)] : nullptr;
      traces[static_cast<size_t>(c)] = run_chain(spec, catalog, data, config, c, init);
    } catch (...) {
      errors[static_cast<size_t>(c)] = std::current_exception();
    }
  };

  int threads = config.threads;
  if (threads <= 0)
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, config.chains);
  if (threads <= 1) {
    for (int c = 0; c < config.chains; ++c) work(c);
  } else {
    for (int base = 0; base < config.chains; base += threads) {
      std::vector<std::thread> pool;
      for (int c = base; c < std::min(base + threads, config.chains); ++c)
        pool.emplace_back(work, c);
      for (auto& th : pool) th.join();
    }
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  return traces;
}

}  // namespace betamix
