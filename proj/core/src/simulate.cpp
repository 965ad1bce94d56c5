#include "betamix/simulate.hpp"

#include <cmath>
#include <limits>

#include "betamix/criteria.hpp"

namespace betamix {

void GenConfig::validate() const {
  if (m < 1 || n_per_group < 1)
    throw SpecError("generator: m and n_per_group must be positive");
  if (beta_true.size() != 3)
    throw SpecError("generator: beta_true must have three coefficients");
  if (sigma_true.rows() != 2 || sigma_true.cols() != 2 || !is_spd(sigma_true))
    throw SpecError("generator: sigma_true must be a 2x2 SPD matrix");
  if (!(phi_true > 0.0) || !std::isfinite(phi_true))
    throw SpecError("generator: phi_true must be positive and finite");
  if (!(nu_true > 0.0))  // +infinity allowed: normal random effects
    throw SpecError("generator: nu_true must be positive");
}

ModelSpec simulation_model_spec(bool student_t_effects) {
  ModelSpec spec;
  spec.p = 3;
  spec.q = 2;
  spec.b_law = student_t_effects ? RandomEffectLaw::StudentT : RandomEffectLaw::Normal;
  return spec;
}

SpecFile simulation_spec_file(bool student_t_effects) {
  SpecFile file;
  file.location = parse_formula("logit(y) ~ 1 + x2 + x3 + (1 + x2 | unit)");
  file.b_law = student_t_effects ? RandomEffectLaw::StudentT : RandomEffectLaw::Normal;
  file.priors.beta = CoefPriorSettings{true, 10.0, 0.0, 10.0};
  file.priors.phi = ScaledBetaSquaredPhiPrior{50.0, 0.5};
  file.priors.psi_b_diag = 20.0;
  file.priors.c_b = 5.0;
  file.priors.nu_rate = 0.1;
  return file;
}

SimulatedData generate_dataset(const GenConfig& config) {
  config.validate();
  const bool normal_effects = std::isinf(config.nu_true);
  Rng cov_rng(split_seed(config.covariate_seed.value_or(config.seed), 0xC0FFEEULL));
  Rng eff_rng(split_seed(config.seed, 0x0DDBA11ULL));

  // covariates first, in one fixed order, so a frozen covariate stream is
  // identical across replicates
  std::vector<std::vector<std::pair<double, double>>> covariates(
      static_cast<size_t>(config.m));
  for (int i = 0; i < config.m; ++i) {
    covariates[static_cast<size_t>(i)].resize(static_cast<size_t>(config.n_per_group));
    for (int j = 0; j < config.n_per_group; ++j) {
      const double x2 = cov_rng.uniform();
      const double x3 = cov_rng.uniform();
      covariates[static_cast<size_t>(i)][static_cast<size_t>(j)] = {x2, x3};
    }
  }

  const ModelSpec spec = simulation_model_spec(!normal_effects);
  ParamState truth = ParamState::sized(spec, config.m);
  truth.beta = config.beta_true;
  truth.phi = config.phi_true;
  truth.sigma_b = config.sigma_true;
  truth.nu_b = config.nu_true;

  std::vector<Group> groups;
  std::vector<std::vector<std::string>> rows;
  groups.reserve(static_cast<size_t>(config.m));
  for (int i = 0; i < config.m; ++i) {
    Vector bi;
    if (normal_effects)
      bi = mvnormal_sample(Vector::Zero(2), config.sigma_true, eff_rng);
    else
      bi = mvt_sample(MvT(config.nu_true, Vector::Zero(2), config.sigma_true), eff_rng);
    truth.b[static_cast<size_t>(i)] = bi;

    Group g;
    g.unit_id = std::to_string(i + 1);
    for (int j = 0; j < config.n_per_group; ++j) {
      const auto [x2, x3] = covariates[static_cast<size_t>(i)][static_cast<size_t>(j)];
      const double eta = config.beta_true[0] + config.beta_true[1] * x2 +
                         config.beta_true[2] * x3 + bi[0] + bi[1] * x2;
      const double mu = mean_response(eta);
      const BetaMP law(mu, config.phi_true);
      double y = beta_mp_sample(law, eff_rng);
      for (int tries = 0; !(y > 0.0 && y < 1.0) && tries < 100; ++tries)
        y = beta_mp_sample(law, eff_rng);
      y = std::clamp(y, 1e-15, 1.0 - 1e-15);
      g.responses.push_back(y);
      g.x_rows.push_back((Vector(3) << 1.0, x2, x3).finished());
      g.z_rows.push_back((Vector(2) << 1.0, x2).finished());
      rows.push_back({g.unit_id, format_double(y), format_double(x2), format_double(x3)});
    }
    groups.push_back(std::move(g));
  }

  SimulatedData out{GroupedDataset(std::move(groups)),
                    Table({"unit", "y", "x2", "x3"}, std::move(rows)), std::move(truth)};
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Accumulator {
  std::map<std::string, double> err_sum, err_sq_sum;
  double dic = 0.0, eaic = 0.0, ebic = 0.0;
  int completed = 0, failed = 0;

  void add(const std::string& name, double err) {
    err_sum[name] += err;
    err_sq_sum[name] += err * err;
  }

  FamilySummary finish(const std::string& label) const {
    FamilySummary s;
    s.label = label;
    s.completed = completed;
    s.failed = failed;
    if (completed > 0) {
      const double n = completed;
      for (const auto& [name, sum] : err_sum) {
        s.bias[name] = sum / n;
        s.rmse[name] = std::sqrt(err_sq_sum.at(name) / n);
      }
      s.mean_dic = dic / n;
      s.mean_eaic = eaic / n;
      s.mean_ebic = ebic / n;
    }
    return s;
  }
};

}  // namespace

ReplicationResult replication_study(const GenConfig& generator, int n_replicates,
                                    const SamplerConfig& fit_budget,
                                    const std::function<void(int)>& progress) {
  generator.validate();
  fit_budget.validate();
  if (n_replicates < 1) throw SpecError("replication: n_replicates must be positive");

  Accumulator acc_t, acc_n;
  const bool gen_is_t = !std::isinf(generator.nu_true);

  for (int r = 0; r < n_replicates; ++r) {
    GenConfig g = generator;
    g.seed = generator.seed + static_cast<std::uint64_t>(r);
    const SimulatedData sim = generate_dataset(g);

    for (int family = 0; family < 2; ++family) {
      const bool fit_t = family == 0;
      Accumulator& acc = fit_t ? acc_t : acc_n;
      const SpecFile file = simulation_spec_file(fit_t);
      const ModelSpec spec = simulation_model_spec(fit_t);
      const PriorCatalog catalog = bind_priors(file, spec);
      SamplerConfig cfg = fit_budget;
      cfg.seed = split_seed(g.seed, fit_t ? 0x7EA5ULL : 0x0A11ULL);
      try {
        const std::vector<Trace> traces = run_ensemble(spec, catalog, sim.data, cfg);
        const ParamState mean = posterior_mean_state(spec, sim.data.m(), traces);
        for (int k = 0; k < 3; ++k)
          acc.add("beta." + std::to_string(k + 1), mean.beta[k] - g.beta_true[k]);
        acc.add("phi", mean.phi - g.phi_true);
        acc.add("Sigma_b.1.1", mean.sigma_b(0, 0) - g.sigma_true(0, 0));
        acc.add("Sigma_b.1.2", mean.sigma_b(0, 1) - g.sigma_true(0, 1));
        acc.add("Sigma_b.2.2", mean.sigma_b(1, 1) - g.sigma_true(1, 1));
        if (fit_t && gen_is_t) acc.add("nu_b", mean.nu_b - g.nu_true);
        const CriteriaReport crit = compute_criteria(spec, sim.data, traces);
        acc.dic += crit.dic;
        acc.eaic += crit.eaic;
        acc.ebic += crit.ebic;
        ++acc.completed;
      } catch (const SamplerError&) {
        ++acc.failed;
      }
    }
    if (progress) progress(r + 1);
  }

  ReplicationResult out;
  out.generator = generator;
  out.n_replicates = n_replicates;
  out.student_t = acc_t.finish("student_t");
  out.normal = acc_n.finish("normal");
  return out;
}

}  // namespace betamix
