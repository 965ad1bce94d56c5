#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "betamix/model.hpp"
#include "betamix/presets.hpp"
#include "betamix/priors.hpp"
#include "betamix/rng.hpp"
#include "betamix/sampler.hpp"
#include "betamix/simulate.hpp"
#include "betamix/specdsl.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace betamix;

namespace {

struct Fixture {
  ModelSpec spec;
  PriorCatalog catalog;
  GroupedDataset data;
};

// small simulated problem: 12 groups of 4, one random intercept, common phi
Fixture small_problem() {
  GenConfig gen;
  gen.m = 12;
  gen.n_per_group = 4;
  gen.beta_true = Vector(3);
  gen.beta_true << -1.0, 0.8, 0.5;
  gen.phi_true = 30.0;
  gen.nu_true = std::numeric_limits<double>::infinity();
  gen.sigma_true = 0.25 * Matrix::Identity(2, 2);
  gen.seed = 5;
  const SimulatedData sim = generate_dataset(gen);

  const SpecFile file = parse_spec_file(
      "[location]\n"
      "formula = logit(y) ~ 1 + x2 + x3 + (1 + x2 | unit)\n"
      "law = student_t\n"
      "[priors]\n"
      "phi = uniform_squared 50\n");
  const DesignBuild build = build_design(file, sim.table);
  return Fixture{build.spec, bind_priors(file, build.spec), build.data};
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("config validation and retention arithmetic") {
  SamplerConfig c;
  c.validate();
  CHECK(c.retained_per_chain() == 18000);

  c.iterations = 101;
  c.burn_in = 1;
  c.thin = 10;
  CHECK(c.retained_per_chain() == 10);

  SamplerConfig bad;
  bad.burn_in = bad.iterations;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = SamplerConfig{};
  bad.thin = 0;
  CHECK_THROWS_AS(bad.validate(), SpecError);
  bad = SamplerConfig{};
  bad.chains = 0;
  CHECK_THROWS_AS(bad.validate(), SpecError);

  SamplerConfig one;
  one.iterations = one.burn_in + one.thin;
  CHECK(one.retained_per_chain() == 1);
}

TEST_CASE("flatten and unflatten are inverse") {
  const Fixture f = small_problem();
  Rng rng(3);
  const ParamState s = initial_state(f.spec, f.catalog, f.data, 1, rng);
  const Vector flat = flatten_state(f.spec, s);
  CHECK(flat.size() == static_cast<long>(parameter_names(f.spec, f.data.m()).size()));
  const ParamState back = unflatten_state(f.spec, f.data.m(), flat);
  CHECK((flatten_state(f.spec, back) - flat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.phi == s.phi);
  CHECK(back.nu_b == s.nu_b);
  CHECK((back.sigma_b - s.sigma_b).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < f.data.m(); ++i)
    CHECK((back.b[i] - s.b[i]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parameter names are unique and ordered") {
  const Fixture f = small_problem();
  const auto names = parameter_names(f.spec, f.data.m());
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
  CHECK(names[0] == "beta.1");
  CHECK(std::find(names.begin(), names.end(), "phi") != names.end());
  CHECK(std::find(names.begin(), names.end(), "nu_b") != names.end());
}

TEST_CASE("same seed reproduces the trace bit for bit") {
  const Fixture f = small_problem();
  SamplerConfig cfg;
  cfg.iterations = 600;
  cfg.burn_in = 100;
  cfg.chains = 1;
  cfg.seed = 77;
  const Trace a = run_chain(f.spec, f.catalog, f.data, cfg, 0);
  const Trace b = run_chain(f.spec, f.catalog, f.data, cfg, 0);
  CHECK((a.draws - b.draws).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.deviance.size() == b.deviance.size());
  for (size_t k = 0; k < a.deviance.size(); ++k) CHECK(a.deviance[k] == b.deviance[k]);

  // a different seed moves the draws
  cfg.seed = 78;
  const Trace c = run_chain(f.spec, f.catalog, f.data, cfg, 0);
  CHECK((a.draws - c.draws).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("chains launched from distinct seeds and starts differ") {
  const Fixture f = small_problem();
  SamplerConfig cfg;
  cfg.iterations = 300;
  cfg.burn_in = 50;
  cfg.chains = 2;
  cfg.seed = 5;
  const std::vector<Trace> traces = run_ensemble(f.spec, f.catalog, f.data, cfg);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].chain_index == 0);
  CHECK(traces[1].chain_index == 1);
  CHECK(traces[0].seed != traces[1].seed);
  CHECK((traces[0].draws.row(0) - traces[1].draws.row(0)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("frozen blocks hold their initial values") {
  const Fixture f = small_problem();
  SamplerConfig cfg;
  cfg.iterations = 400;
  cfg.burn_in = 50;
  cfg.chains = 1;
  cfg.seed = 9;
  cfg.frozen_blocks = {"beta", "phi"};
  const Trace t = run_chain(f.spec, f.catalog, f.data, cfg, 0);
  const auto names = parameter_names(f.spec, f.data.m());
  for (size_t j = 0; j < names.size(); ++j) {
    const bool is_frozen = names[j].rfind("beta.", 0) == 0 || names[j] == "phi";
    const double spread =
        t.draws.col(static_cast<long>(j)).maxCoeff() - t.draws.col(static_cast<long>(j)).minCoeff();
    if (is_frozen)
      CHECK_MESSAGE(spread == 0.0, names[j], " moved while frozen");
    else if (names[j].rfind("b.", 0) == 0)
      CHECK_MESSAGE(spread > 0.0, names[j], " never moved");
  }
}

TEST_CASE("recorded deviance equals the likelihood at the recorded draw") {
  const Fixture f = small_problem();
  SamplerConfig cfg;
  cfg.iterations = 250;
  cfg.burn_in = 50;
  cfg.thin = 5;
  cfg.chains = 1;
  cfg.seed = 12;
  const Trace t = run_chain(f.spec, f.catalog, f.data, cfg, 0);
  REQUIRE(t.deviance.size() == static_cast<size_t>(cfg.retained_per_chain()));
  for (long k = 0; k < t.draws.rows(); ++k) {
    const ParamState s = unflatten_state(f.spec, f.data.m(), t.draws.row(k).transpose());
    const double dev = -2.0 * log_likelihood(f.spec, s, f.data);
    CHECK(t.deviance[static_cast<size_t>(k)] == doctest::Approx(dev).epsilon(1e-8));
  }
}

TEST_CASE("covariance conditional matches its closed-form mean") {
  // q = 1: Sigma | b ~ InverseGamma((c + m)/2, (psi + sum lambda b^2)/2).
  // psi = 2, c = 3, one effect b = 1 with lambda = 1: mean (2+1)/(3+1-2) = 1.5
  Rng rng(21);
  const Matrix psi = 2.0 * Matrix::Identity(1, 1);
  std::vector<Vector> effects(1, Vector::Ones(1));
  const Vector lambdas = Vector::Ones(1);
  double acc = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k)
    acc += conjugate_sigma_draw(psi, 3.0, effects, lambdas, rng)(0, 0);
  CHECK(acc / n == doctest::Approx(1.5).epsilon(0.03));
}

TEST_CASE("covariance conditional with no groups is the prior") {
  Rng rng(22);
  const Matrix psi = 20.0 * Matrix::Identity(2, 2);
  Matrix acc = Matrix::Zero(2, 2);
  const int n = 50000;
  for (int k = 0; k < n; ++k)
    acc += conjugate_sigma_draw(psi, 5.0, {}, Vector(0), rng);
  acc /= static_cast<double>(n);
  // prior mean psi / (c - q - 1) = diag(10, 10)
  CHECK(acc(0, 0) == doctest::Approx(10.0).epsilon(0.05));
  CHECK(acc(1, 1) == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("covariance conditional is proportional to prior times likelihood") {
  // density ratio check at random SPD points: the sampled law must equal
  // InvWishart(psi + sum lambda_i b_i b_i', c + m) up to a constant
  Rng rng(31);
  const Matrix psi = (Matrix(2, 2) << 3.0, 0.5, 0.5, 2.0).finished();
  const double c = 6.0;
  std::vector<Vector> effects;
  Vector lambdas(3);
  for (int i = 0; i < 3; ++i) {
    Vector b(2);
    b << rng.normal(), rng.normal();
    effects.push_back(b);
    lambdas[i] = rng.gamma(5.0, 5.0);
  }
  Matrix sum = psi;
  for (int i = 0; i < 3; ++i) sum += lambdas[i] * effects[static_cast<size_t>(i)] *
                                     effects[static_cast<size_t>(i)].transpose();
  const InvWishart posterior(sum, c + 3.0);

  // log prior + log normal-likelihood minus the posterior log density must be
  // the same constant at every test point
  auto log_target = [&](const Matrix& s) {
    double v = inv_wishart_log_pdf(s, InvWishart(psi, c));
    for (int i = 0; i < 3; ++i)
      v += mvnormal_log_pdf(effects[static_cast<size_t>(i)], Vector::Zero(2),
                            s / lambdas[i]);
    return v;
  };
  double ref = 0.0;
  for (int k = 0; k < 5; ++k) {
    Matrix a(2, 2);
    a << 1.0 + rng.uniform(), 0.3 * rng.normal(), 0.0, 1.0 + rng.uniform();
    a(1, 0) = a(0, 1);
    const Matrix point = nearest_spd(a);
    const double gap = log_target(point) - inv_wishart_log_pdf(point, posterior);
    if (k == 0)
      ref = gap;
    else
      CHECK(gap == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("mixing weight conditional") {
  Rng rng(41);
  // b = 0: lambda ~ Gamma((nu + q)/2, nu/2), mean (nu + q)/nu
  {
    const double nu = 10.0;
    double acc = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) acc += conjugate_lambda_draw(nu, 2, 0.0, rng);
    CHECK(acc / n == doctest::Approx((nu + 2.0) / nu).epsilon(0.02));
  }
  // the draws follow the gamma law itself, not merely its mean
  {
    std::vector<double> draws(50000);
    for (double& d : draws) d = conjugate_lambda_draw(7.0, 1, 2.5, rng);
    const auto ks = oracles::ks_test(draws, [](double x) {
      return oracles::gamma_cdf(x, (7.0 + 1.0) / 2.0, (7.0 + 2.5) / 2.0);
    });
    CHECK_MESSAGE(ks.pass, "lambda KS ", ks.statistic, " vs ", ks.critical);
  }
  // enormous dof pins lambda at 1
  {
    std::vector<double> draws(5000);
    for (double& d : draws) d = conjugate_lambda_draw(1e4, 1, 1.0, rng);
    CHECK(oracles::mean(draws) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(oracles::sample_variance(draws) < 0.01);
  }
}

TEST_CASE("scale mixture of normals reproduces the t law") {
  // draw lambda ~ Gamma(nu/2, nu/2), b | lambda ~ N(0, sigma2/lambda);
  // marginally b / sigma ~ t(nu)
  Rng rng(51);
  const double nu = 10.0;
  const double sigma2 = 2.0;
  std::vector<double> draws(60000);
  for (double& d : draws) {
    const double lambda = rng.gamma(nu / 2.0, nu / 2.0);
    d = rng.normal(0.0, std::sqrt(sigma2 / lambda));
  }
  const auto ks = oracles::ks_test(draws, [&](double b) {
    return oracles::student_t_cdf(b / std::sqrt(sigma2), nu);
  });
  CHECK_MESSAGE(ks.pass, "mixture KS ", ks.statistic, " vs ", ks.critical);
}

TEST_CASE("adaptive proposal reaches its target acceptance and freezes") {
  // target a standard normal through the block's own propose/record loop
  Rng rng(61);
  AdaptiveBlock block(1, 0.44, 200, Matrix::Identity(1, 1));
  Vector x = Vector::Zero(1);
  double log_density = -0.5 * x.squaredNorm();
  long accepted = 0, total = 0;
  for (int k = 0; k < 6000; ++k) {
    const Vector prop = block.propose(x, rng);
    const double cand = -0.5 * prop.squaredNorm();
    const bool accept = std::log(rng.uniform()) < cand - log_density;
    if (accept) {
      x = prop;
      log_density = cand;
    }
    block.record(x, accept);
    if (k >= 3000) {
      total += 1;
      accepted += accept ? 1 : 0;
    }
  }
  const double rate = static_cast<double>(accepted) / static_cast<double>(total);
  CHECK(rate == doctest::Approx(0.44).epsilon(0.25));

  block.freeze();
  CHECK(block.frozen());
  const double step_before = block.log_step();
  const Matrix cov_before = block.covariance();
  for (int k = 0; k < 500; ++k) {
    const Vector prop = block.propose(x, rng);
    block.record(prop, true);
  }
  CHECK(block.log_step() == step_before);
  CHECK((block.covariance() - cov_before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(block.post_freeze_proposals() == 500);
  CHECK(block.post_freeze_rate() == doctest::Approx(1.0));
}

TEST_CASE("initial states respect the support and spread across chains") {
  const Fixture f = small_problem();
  Rng r0(1), r1(2), r2(3);
  const ParamState s0 = initial_state(f.spec, f.catalog, f.data, 0, r0);
  const ParamState s1 = initial_state(f.spec, f.catalog, f.data, 1, r1);
  const ParamState s2 = initial_state(f.spec, f.catalog, f.data, 2, r2);
  for (const ParamState* s : {&s0, &s1, &s2}) {
    CHECK(s->phi > 0.0);
    CHECK(s->phi < 2500.0);  // inside the uniform-squared support
    CHECK(is_spd(s->sigma_b));
    CHECK(s->nu_b > 0.0);
    for (int i = 0; i < f.data.m(); ++i) CHECK(s->lambda_b[i] > 0.0);
  }
  // over-dispersed chains start away from the anchor chain
  CHECK((s1.beta - s0.beta).norm() > 0.0);
  CHECK((s2.beta - s1.beta).norm() > 0.0);
}

TEST_CASE("posterior concentrates near the generating values on an easy problem") {
  GenConfig gen;
  gen.m = 40;
  gen.n_per_group = 8;
  gen.beta_true = Vector(3);
  gen.beta_true << -1.0, 1.0, 0.5;
  gen.phi_true = 60.0;
  gen.nu_true = std::numeric_limits<double>::infinity();
  gen.sigma_true = 0.09 * Matrix::Identity(2, 2);
  gen.seed = 31;
  const SimulatedData sim = generate_dataset(gen);
  const SpecFile file = parse_spec_file(
      "[location]\n"
      "formula = logit(y) ~ 1 + x2 + x3 + (1 + x2 | unit)\n"
      "law = normal\n"
      "[priors]\n"
      "phi = uniform_squared 50\n");
  const DesignBuild build = build_design(file, sim.table);
  const PriorCatalog cat = bind_priors(file, build.spec);
  SamplerConfig cfg;
  cfg.iterations = 4000;
  cfg.burn_in = 1000;
  cfg.chains = 1;
  cfg.seed = 2;
  const Trace t = run_chain(build.spec, cat, build.data, cfg, 0);
  const auto names = parameter_names(build.spec, build.data.m());
  auto col_mean = [&](const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    REQUIRE(it != names.end());
    return t.draws.col(it - names.begin()).mean();
  };
  CHECK(col_mean("beta.1") == doctest::Approx(-1.0).epsilon(0.25));
  CHECK(col_mean("beta.2") == doctest::Approx(1.0).epsilon(0.25));
  CHECK(col_mean("phi") == doctest::Approx(60.0).epsilon(0.25));
}

}  // TEST_SUITE
