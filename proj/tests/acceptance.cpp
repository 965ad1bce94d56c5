// Acceptance gate: one test case per release criterion.  Every case prints a
// single "[ACCEPTANCE] <name>: PASS|FAIL (...)" line; tolerances live here in
// code, not in configuration.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "betamix/artifact.hpp"
#include "betamix/criteria.hpp"
#include "betamix/diagnostics.hpp"
#include "betamix/presets.hpp"
#include "betamix/simulate.hpp"
#include "betamix/specdsl.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace betamix;
namespace fs = std::filesystem;

namespace {

const std::string kTool = BETAMIX_TOOL_PATH;

// failure accumulator; keeps every broken condition for the summary line
struct Gate {
  std::string name;
  std::vector<std::string> fails;
  std::ostringstream detail;

  explicit Gate(std::string n) : name(std::move(n)) {}

  void expect(bool ok, const std::string& what) {
    if (!ok) fails.push_back(what);
  }

  bool finish() {
    const bool pass = fails.empty();
    std::string why = detail.str();
    if (!pass) {
      why += why.empty() ? "" : "; ";
      why += "failed:";
      for (const std::string& f : fails) why += " [" + f + "]";
    }
    std::printf("[ACCEPTANCE] %s: %s (%s)\n", name.c_str(), pass ? "PASS" : "FAIL",
                why.c_str());
    std::fflush(stdout);
    return pass;
  }
};

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

// the shared simulated dataset for the recovery and selection criteria:
// 50 groups of 5, t(10) effects, the study's canonical truth
GenConfig shared_generator() {
  GenConfig g;
  g.m = 50;
  g.n_per_group = 5;
  g.beta_true = (Vector(3) << -2.0, 1.0, 2.0).finished();
  g.phi_true = 49.0;
  g.nu_true = 10.0;
  g.sigma_true = (Matrix(2, 2) << 1.0, -0.3, -0.3, 0.2).finished();
  g.seed = 44;
  return g;
}

SamplerConfig desk_budget() {
  SamplerConfig c;
  c.iterations = 20000;
  c.burn_in = 5000;
  c.thin = 1;
  c.chains = 2;
  c.seed = 1;
  return c;
}

std::vector<double> pooled_column(const std::vector<Trace>& traces,
                                  const std::vector<std::string>& names,
                                  const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  REQUIRE_MESSAGE(it != names.end(), "no parameter called ", name);
  const long col = it - names.begin();
  std::vector<double> out;
  for (const Trace& t : traces)
    for (long r = 0; r < t.draws.rows(); ++r) out.push_back(t.draws(r, col));
  return out;
}

struct FitResult {
  ModelSpec spec;
  int m = 0;
  std::vector<Trace> traces;
  std::vector<std::string> names;
  DiagnosticsReport report;
  CriteriaReport criteria;
};

FitResult fit_table(SpecFile file, const Table& table, const SamplerConfig& budget) {
  file.sampler = budget;
  const DesignBuild design = build_design(file, table);
  const PriorCatalog catalog = bind_priors(file, design.spec);
  FitResult out;
  out.spec = design.spec;
  out.m = design.data.m();
  out.traces = run_ensemble(design.spec, catalog, design.data, file.sampler);
  out.names = parameter_names(design.spec, design.data.m());
  out.report = diagnose(design.spec, design.data.m(), out.traces);
  out.criteria = compute_criteria(design.spec, design.data, out.traces);
  return out;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

// --------------------------------------------------------------------------
// Criterion: with simulated data from the canonical truth, a desk-budget fit
// recovers every coefficient within 0.15, the precision within 15%, and the
// central 95% intervals cover at least 7 of the 8 generating values.

TEST_CASE("recovery") {
  Gate gate("recovery");

  const GenConfig gen = shared_generator();
  const SimulatedData sim = generate_dataset(gen);
  const FitResult fit = fit_table(simulation_spec_file(true), sim.table, desk_budget());

  const double truth[8] = {-2.0, 1.0, 2.0, 49.0, 1.0, -0.3, 0.2, 10.0};
  const char* names[8] = {"beta.1", "beta.2", "beta.3", "phi",
                          "Sigma_b.1.1", "Sigma_b.1.2", "Sigma_b.2.2", "nu_b"};

  int covered = 0;
  for (int k = 0; k < 8; ++k) {
    const SummaryStats s =
        summarize_draws(pooled_column(fit.traces, fit.names, names[k]));
    if (s.q025 <= truth[k] && truth[k] <= s.q975) ++covered;
    if (k < 3) {
      const double err = std::abs(s.mean - truth[k]);
      gate.detail << names[k] << " err " << fmt("%.3f", err) << ", ";
      gate.expect(err <= 0.15,
                  std::string(names[k]) + " error " + fmt("%.3f", err) + " > 0.15");
    }
    if (k == 3) {
      const double rel = std::abs(s.mean - 49.0) / 49.0;
      gate.detail << "phi rel err " << fmt("%.1f", 100.0 * rel) << "%, ";
      gate.expect(rel <= 0.15, "phi relative error " + fmt("%.3f", rel) + " > 0.15");
    }
  }
  gate.detail << "coverage " << covered << "/8, mpsrf "
              << fmt("%.3f", fit.report.mpsrf);
  gate.expect(covered >= 7, "interval coverage " + std::to_string(covered) + "/8 < 7");
  gate.expect(fit.report.converged, "shrink gate rejected the run");

  CHECK(gate.finish());
}

// --------------------------------------------------------------------------
// Criterion: on data generated with a common precision, the model with fixed
// precision regression beats the one that also carries grouped precision
// effects on DIC.

TEST_CASE("precision-selection") {
  Gate gate("precision-selection");

  const SimulatedData sim = generate_dataset(shared_generator());
  const FitResult fixed_prec =
      fit_table(model_preset("model-2a"), sim.table, desk_budget());
  const FitResult grouped_prec =
      fit_table(model_preset("model-2b"), sim.table, desk_budget());

  gate.detail << "DIC fixed " << fmt("%.2f", fixed_prec.criteria.dic) << " vs grouped "
              << fmt("%.2f", grouped_prec.criteria.dic);
  gate.expect(fixed_prec.criteria.dic < grouped_prec.criteria.dic,
              "DIC preferred the spurious grouped-precision model");
  gate.expect(fixed_prec.report.converged, "fixed-precision run did not converge");
  gate.expect(grouped_prec.report.converged, "grouped-precision run did not converge");

  CHECK(gate.finish());
}

// --------------------------------------------------------------------------
// Criterion: over 20 replicates, heavy-tailed data (dof 5) makes the
// Student-t family win on mean DIC; near-normal data (dof 50) shrinks that
// gap below a third; rmse dominates |bias| everywhere.

TEST_CASE("replication") {
  Gate gate("replication");

  GenConfig gen;
  gen.m = 50;
  gen.n_per_group = 5;
  gen.seed = 1;

  SamplerConfig budget;
  budget.iterations = 8000;
  budget.burn_in = 2000;
  budget.chains = 1;
  budget.seed = 1;

  gen.nu_true = 5.0;
  const ReplicationResult heavy = replication_study(gen, 20, budget);
  gen.nu_true = 50.0;
  const ReplicationResult light = replication_study(gen, 20, budget);

  const double gap_heavy = heavy.student_t.mean_dic - heavy.normal.mean_dic;
  const double gap_light = light.student_t.mean_dic - light.normal.mean_dic;
  gate.detail << "DIC gap dof5 " << fmt("%.2f", gap_heavy) << ", dof50 "
              << fmt("%.2f", gap_light);

  gate.expect(gap_heavy < 0.0, "t family did not win mean DIC at dof 5");
  gate.expect(std::abs(gap_light) < std::abs(gap_heavy) / 3.0,
              "near-normal gap " + fmt("%.2f", gap_light) +
                  " is not below a third of " + fmt("%.2f", gap_heavy));
  for (const ReplicationResult* res : {&heavy, &light})
    for (const FamilySummary* fam : {&res->student_t, &res->normal}) {
      gate.expect(fam->completed == 20,
                  fam->label + " completed " + std::to_string(fam->completed) + "/20");
      for (const auto& [param, bias] : fam->bias)
        gate.expect(fam->rmse.at(param) >= std::abs(bias) - 1e-12,
                    fam->label + " " + param + " rmse < |bias|");
    }

  CHECK(gate.finish());
}

// --------------------------------------------------------------------------
// Criterion: on the bundled gasoline-yield data the bounded-prior constant
// precision model reproduces the published location effect and precision,
// and among the four varying-precision models the EP-regression one with
// grouped location effects wins DIC.

TEST_CASE("prater") {
  Gate gate("prater");

  const Table table = Table::read_csv_file(std::string(BETAMIX_DATA_DIR) + "/prater.csv");
  SamplerConfig budget;
  budget.iterations = 100000;
  budget.burn_in = 20000;
  budget.thin = 10;
  budget.chains = 2;
  budget.seed = 1;

  const FitResult base = fit_table(model_preset("prater-1.4"), table, budget);
  const double beta2 = oracles::mean(pooled_column(base.traces, base.names, "beta.2"));
  const double phi = oracles::mean(pooled_column(base.traces, base.names, "phi"));
  gate.detail << "beta2 " << fmt("%.5f", beta2) << ", phi " << fmt("%.1f", phi);
  gate.expect(beta2 >= 0.0095 && beta2 <= 0.0120,
              "temperature effect " + fmt("%.5f", beta2) + " outside [0.0095, 0.0120]");
  gate.expect(phi >= 200.0 && phi <= 400.0,
              "precision " + fmt("%.1f", phi) + " outside [200, 400]");
  gate.expect(base.report.converged, "constant-precision run did not converge");

  const char* rivals[4] = {"prater-2.3", "prater-2.4", "prater-2.5", "prater-2.6"};
  double dic[4];
  bool all_converged = true;
  for (int k = 0; k < 4; ++k) {
    const FitResult r = fit_table(model_preset(rivals[k]), table, budget);
    dic[k] = r.criteria.dic;
    all_converged = all_converged && r.report.converged;
    gate.detail << ", " << rivals[k] << " DIC " << fmt("%.2f", dic[k]);
  }
  gate.expect(all_converged, "a varying-precision run did not converge");
  const int best = static_cast<int>(std::min_element(dic, dic + 4) - dic);
  gate.expect(best == 2, std::string("best DIC went to ") + rivals[best] +
                             ", expected prater-2.5");

  CHECK(gate.finish());
}

// --------------------------------------------------------------------------
// Criterion: a run whose multivariate shrink factor is at or above 1.2 is
// reported as invalid, with a zero exit code, while a clean run is accepted.

TEST_CASE("convergence-gate") {
  Gate gate("convergence-gate");

  // exact: identical chains sit below any sane threshold
  {
    Rng rng(3);
    Matrix draws(200, 2);
    for (int r = 0; r < 200; ++r) {
      draws(r, 0) = rng.normal();
      draws(r, 1) = rng.normal();
    }
    gate.expect(mpsrf({draws, draws}) < 1.2, "identical chains failed the gate");
    Matrix shifted = draws;
    shifted.col(0).array() += 100.0;
    gate.expect(mpsrf({draws, shifted}) > 1.2, "separated chains passed the gate");
  }

  const fs::path dir = oracles::fresh_dir("acc-gate");
  const fs::path data = dir / "sim.csv";
  const auto sim = oracles::run_command(
      kTool + " simulate --m 15 --n 4 --phi 30 --nu inf --sigma 0.2,0,0.1 --seed 3 --out " +
      q(data));
  REQUIRE_MESSAGE(sim.status == 0, sim.output);
  std::ofstream(dir / "model.ini")
      << "[location]\n"
         "formula = logit(y) ~ 1 + x2 + x3 + (1 | unit)\n"
         "law = normal\n"
         "[priors]\n"
         "phi = uniform_squared 50\n";

  // starved run: over-dispersed starts cannot meet in 150 iterations
  const auto starved = oracles::run_command(
      kTool + " fit --data " + q(data) + " --spec " + q(dir / "model.ini") +
      " --iterations 150 --burn-in 30 --seed 1 --out " + q(dir / "starved"));
  gate.expect(starved.status == 0,
              "starved run exited " + std::to_string(starved.status) + ", not 0");
  gate.expect(starved.output.find("treat as invalid") != std::string::npos,
              "starved run was not marked invalid");
  const RunMetadata starved_meta = read_run_metadata(dir / "starved");
  gate.detail << "starved mpsrf " << fmt("%.2f", starved_meta.mpsrf);
  gate.expect(!starved_meta.converged, "starved metadata claims convergence");
  gate.expect(starved_meta.mpsrf >= 1.2, "starved shrink factor below threshold");

  // adequate run on the same data passes
  const auto healthy = oracles::run_command(
      kTool + " fit --data " + q(data) + " --spec " + q(dir / "model.ini") +
      " --iterations 4000 --burn-in 1000 --seed 1 --out " + q(dir / "healthy"));
  gate.expect(healthy.status == 0,
              "healthy run exited " + std::to_string(healthy.status) + ", not 0");
  gate.expect(healthy.output.find("run accepted") != std::string::npos,
              "healthy run was not accepted");
  const RunMetadata healthy_meta = read_run_metadata(dir / "healthy");
  gate.detail << ", healthy mpsrf " << fmt("%.3f", healthy_meta.mpsrf);
  gate.expect(healthy_meta.converged, "healthy metadata denies convergence");
  gate.expect(healthy_meta.mpsrf < 1.2, "healthy shrink factor at or above threshold");

  CHECK(gate.finish());
}

// --------------------------------------------------------------------------
// Criterion: on a two-observation model small enough for quadrature, the
// sampler's posterior means match a dense grid oracle within 2%.

TEST_CASE("micro-oracle") {
  Gate gate("micro-oracle");

  // one group, two responses; coefficient and effect both N(0, 2); precision
  // held at 10 so the posterior is exactly two-dimensional
  const double prior_var = 2.0;
  const double phi = 10.0;
  const std::vector<double> ys = {0.80, 0.85};

  auto log_kernel = [&](double beta, double b) {
    double lp = -0.5 * (beta * beta + b * b) / prior_var;
    for (double y : ys) lp += beta_mp_log_pdf(y, BetaMP(mean_response(beta + b), phi));
    return lp;
  };

  // composite Simpson on [-7, 8]^2, 601 points per axis
  const int n = 601;
  const double lo = -7.0, hi = 8.0;
  const double h = (hi - lo) / (n - 1);
  auto weight = [&](int i) { return (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; i += 8)
    for (int j = 0; j < n; j += 8)
      peak = std::max(peak, log_kernel(lo + i * h, lo + j * h));
  double mass = 0.0, mom_beta = 0.0, mom_b = 0.0;
  for (int i = 0; i < n; ++i) {
    const double beta = lo + i * h;
    for (int j = 0; j < n; ++j) {
      const double b = lo + j * h;
      const double w = weight(i) * weight(j) * std::exp(log_kernel(beta, b) - peak);
      mass += w;
      mom_beta += w * beta;
      mom_b += w * b;
    }
  }
  const double grid_beta = mom_beta / mass;
  const double grid_b = mom_b / mass;

  // the same posterior through the sampler, precision and scale frozen
  ModelSpec spec;
  spec.p = 1;
  spec.q = 1;
  spec.b_law = RandomEffectLaw::Normal;

  Group g;
  g.unit_id = "1";
  g.responses = ys;
  g.x_rows = {Vector::Ones(1), Vector::Ones(1)};
  g.z_rows = {Vector::Ones(1), Vector::Ones(1)};
  const GroupedDataset data({g});

  PriorCatalog catalog;
  catalog.beta_prior.student_t = false;
  catalog.beta_prior.mean = Vector::Zero(1);
  catalog.beta_prior.scale = prior_var * Matrix::Identity(1, 1);
  catalog.phi_prior = InverseGammaPhiPrior{0.5};
  catalog.psi_b = 2.0 * Matrix::Identity(1, 1);
  catalog.c_b = 5.0;

  ParamState init = ParamState::sized(spec, 1);
  init.beta[0] = 0.0;
  init.b[0][0] = 0.0;
  init.phi = phi;
  init.sigma_b = prior_var * Matrix::Identity(1, 1);

  SamplerConfig cfg;
  cfg.iterations = 400000;
  cfg.burn_in = 40000;
  cfg.thin = 10;
  cfg.chains = 2;
  cfg.seed = 3;
  cfg.frozen_blocks = {"phi", "sigma_b"};
  const std::vector<ParamState> inits = {init, init};
  const std::vector<Trace> traces = run_ensemble(spec, catalog, data, cfg, &inits);

  const auto names = parameter_names(spec, 1);
  const double mc_beta = oracles::mean(pooled_column(traces, names, "beta.1"));
  const double mc_b = oracles::mean(pooled_column(traces, names, "b.1.1"));

  const double rel_beta = std::abs(mc_beta - grid_beta) / std::abs(grid_beta);
  const double rel_b = std::abs(mc_b - grid_b) / std::abs(grid_b);
  gate.detail << "grid beta " << fmt("%.4f", grid_beta) << " vs chain "
              << fmt("%.4f", mc_beta) << " (" << fmt("%.2f", 100.0 * rel_beta)
              << "%), grid b " << fmt("%.4f", grid_b) << " vs chain " << fmt("%.4f", mc_b)
              << " (" << fmt("%.2f", 100.0 * rel_b) << "%)";
  gate.expect(rel_beta <= 0.02, "coefficient mean off by " + fmt("%.3f", rel_beta));
  gate.expect(rel_b <= 0.02, "effect mean off by " + fmt("%.3f", rel_b));

  CHECK(gate.finish());
}

// --------------------------------------------------------------------------
// Criterion: with the likelihood disabled the chain reproduces every prior
// marginal (Kolmogorov-Smirnov at the 1% level), for each precision prior
// family, and the normal/gamma augmentation reproduces the t law exactly.

TEST_CASE("prior-recovery") {
  Gate gate("prior-recovery");

  // tiny placeholder dataset; its values never enter the target
  std::vector<Group> groups;
  for (int i = 0; i < 5; ++i) {
    Group g;
    g.unit_id = std::to_string(i + 1);
    g.responses = {0.3, 0.6};
    g.x_rows = {Vector::Ones(1), Vector::Ones(1)};
    g.z_rows = {Vector::Ones(1), Vector::Ones(1)};
    groups.push_back(g);
  }
  const GroupedDataset data(groups);

  ModelSpec spec;
  spec.p = 1;
  spec.q = 1;
  spec.b_law = RandomEffectLaw::StudentT;

  PriorCatalog catalog;
  catalog.beta_prior.student_t = true;
  catalog.beta_prior.dof = 10.0;
  catalog.beta_prior.mean = Vector::Zero(1);
  catalog.beta_prior.scale = 10.0 * Matrix::Identity(1, 1);
  catalog.psi_b = 20.0 * Matrix::Identity(1, 1);
  catalog.c_b = 5.0;
  catalog.nu_rate = 0.1;
  catalog.nu_above_two = false;

  SamplerConfig cfg;
  cfg.iterations = 160000;
  cfg.burn_in = 10000;
  cfg.thin = 30;
  cfg.chains = 1;
  cfg.likelihood_enabled = false;

  struct PhiCase {
    PhiPrior prior;
    std::function<double(double)> cdf;
  };
  const std::vector<PhiCase> phi_cases = {
      {InverseGammaPhiPrior{0.5},
       [](double p) { return oracles::inv_gamma_cdf(p, 0.5, 0.5); }},
      {UniformSquaredPhiPrior{50.0}, [](double p) { return std::sqrt(p) / 50.0; }},
      {ScaledBetaSquaredPhiPrior{50.0, 0.5},
       [](double p) { return oracles::beta_cdf(std::sqrt(p) / 50.0, 1.5, 1.5); }},
      {LogTPhiPrior{10.0, 0.0, 5.0},
       [](double p) { return oracles::student_t_cdf(std::log(p) / std::sqrt(5.0), 10.0); }},
  };

  for (size_t pc = 0; pc < phi_cases.size(); ++pc) {
    PriorCatalog cat = catalog;
    cat.phi_prior = phi_cases[pc].prior;
    SamplerConfig run_cfg = cfg;
    run_cfg.seed = 100 + pc;
    const Trace t = run_chain(spec, cat, data, run_cfg, 0);
    const auto names = parameter_names(spec, data.m());

    const auto phi_draws =
        oracles::thin(pooled_column({t}, names, "phi"), 5);
    const auto phi_ks = oracles::ks_test(phi_draws, phi_cases[pc].cdf);
    gate.detail << phi_prior_name(phi_cases[pc].prior) << " D "
                << fmt("%.4f", phi_ks.statistic) << (pc + 1 < phi_cases.size() ? ", " : "");
    gate.expect(phi_ks.pass, phi_prior_name(phi_cases[pc].prior) + " KS " +
                                 fmt("%.4f", phi_ks.statistic) + " > " +
                                 fmt("%.4f", phi_ks.critical));

    if (pc == 0) {
      // the blocks shared by every run only need one check
      const auto beta = oracles::thin(pooled_column({t}, names, "beta.1"), 5);
      const auto beta_ks = oracles::ks_test(beta, [](double v) {
        return oracles::student_t_cdf(v / std::sqrt(10.0), 10.0);
      });
      gate.expect(beta_ks.pass, "coefficient KS " + fmt("%.4f", beta_ks.statistic) +
                                    " > " + fmt("%.4f", beta_ks.critical));

      // q = 1 inverse Wishart margin is InverseGamma(c/2, psi/2)
      const auto sigma = oracles::thin(pooled_column({t}, names, "Sigma_b.1.1"), 5);
      const auto sigma_ks = oracles::ks_test(sigma, [](double v) {
        return oracles::inv_gamma_cdf(v, 2.5, 10.0);
      });
      gate.expect(sigma_ks.pass, "covariance KS " + fmt("%.4f", sigma_ks.statistic) +
                                     " > " + fmt("%.4f", sigma_ks.critical));

      const auto nu = oracles::thin(pooled_column({t}, names, "nu_b"), 10);
      const auto nu_ks = oracles::ks_test(nu, [](double v) {
        return oracles::exponential_cdf(v, 0.1);
      });
      gate.expect(nu_ks.pass, "dof KS " + fmt("%.4f", nu_ks.statistic) + " > " +
                                  fmt("%.4f", nu_ks.critical));

      // random effect marginalises the mixing weight into a t(10) tail
      const auto b1 = oracles::thin(pooled_column({t}, names, "b.1.1"), 5);
      std::vector<double> scaled(b1.size());
      const auto sig = pooled_column({t}, names, "Sigma_b.1.1");
      // standardise each draw by its own covariance draw before testing
      const auto sig_thin = oracles::thin(sig, 5);
      for (size_t k = 0; k < b1.size(); ++k)
        scaled[k] = b1[k] / std::sqrt(sig_thin[k]);
      const auto b_ks = oracles::ks_test(scaled, [](double v) {
        return oracles::student_t_cdf(v, 10.0);
      });
      gate.expect(b_ks.pass, "effect KS " + fmt("%.4f", b_ks.statistic) + " > " +
                                 fmt("%.4f", b_ks.critical));
    }
  }

  // augmentation identity with iid draws: Gamma mixing of normal scales is t
  {
    Rng rng(7);
    const double nu = 10.0, s2 = 2.0;
    std::vector<double> draws(30000);
    for (double& d : draws) {
      const double lambda = rng.gamma(nu / 2.0, nu / 2.0);
      d = rng.normal(0.0, std::sqrt(s2 / lambda));
    }
    const auto ks = oracles::ks_test(draws, [&](double b) {
      return oracles::student_t_cdf(b / std::sqrt(s2), nu);
    });
    gate.detail << ", mixture D " << fmt("%.4f", ks.statistic);
    gate.expect(ks.pass, "scale-mixture KS " + fmt("%.4f", ks.statistic) + " > " +
                             fmt("%.4f", ks.critical));
  }

  CHECK(gate.finish());
}

// --------------------------------------------------------------------------
// Criterion: closed-form identities hold to near machine precision.

TEST_CASE("closed-forms") {
  Gate gate("closed-forms");
  auto near = [&](double got, double want, double tol, const std::string& what) {
    gate.expect(std::abs(got - want) <= tol,
                what + ": " + fmt("%.12f", got) + " vs " + fmt("%.12f", want));
  };

  // the mean/precision beta law collapses to uniform at (1/2, 2)
  for (double y : {0.1, 0.37, 0.5, 0.93})
    near(beta_mp_log_pdf(y, BetaMP(0.5, 2.0)), 0.0, 1e-12, "uniform log density");

  // standard Cauchy at its centre
  near(mvt_log_pdf(Vector::Zero(1), MvT(1.0, Vector::Zero(1), Matrix::Identity(1, 1))),
       -1.1447298858494001741, 1e-12, "Cauchy at 0");

  // mean-precision variance identity
  for (double mu : {0.2, 0.5, 0.8})
    for (double p : {2.0, 49.0, 300.0})
      near(beta_mp_moments(BetaMP(mu, p)).second, mu * (1.0 - mu) / (1.0 + p), 1e-14,
           "variance identity");

  // a chain stuck at one state has zero effective parameters
  {
    ModelSpec spec;
    spec.p = 1;
    spec.q = 1;
    Group g;
    g.unit_id = "1";
    g.responses = {0.4, 0.6};
    g.x_rows = {Vector::Ones(1), Vector::Ones(1)};
    g.z_rows = {Vector::Ones(1), Vector::Ones(1)};
    const GroupedDataset data({g});
    ParamState s = ParamState::sized(spec, 1);
    s.beta[0] = 0.2;
    s.phi = 7.0;
    Trace t;
    const Vector flat = flatten_state(spec, s);
    t.draws = Matrix::Zero(40, flat.size());
    for (int r = 0; r < 40; ++r) t.draws.row(r) = flat.transpose();
    t.deviance.assign(40, deviance(spec, s, data));
    const CriteriaReport rep = compute_criteria(spec, data, {t});
    near(rep.p_d, 0.0, 1e-9, "degenerate p_d");
    near(rep.dic, deviance(spec, s, data), 1e-9, "degenerate DIC");
    near(rep.eaic - rep.ebic,
         rep.parameter_count * (2.0 - std::log(static_cast<double>(rep.n_obs))), 1e-10,
         "EAIC-EBIC identity");
  }

  // identical chains give exactly sqrt((n-1)/n)
  {
    Rng rng(5);
    std::vector<double> chain(250);
    for (double& x : chain) x = rng.normal();
    near(psrf({chain, chain}), std::sqrt(249.0 / 250.0), 1e-12, "identical-chain psrf");
  }

  gate.detail << "uniform density, Cauchy constant, variance identity, degenerate "
                 "DIC, psrf floor";
  CHECK(gate.finish());
}

// --------------------------------------------------------------------------
// Criterion: diagnostics transform correctly: shrink factors and drift scores
// are affine invariant, criteria ignore group order, and effective sample
// sizes stay within [0, n] and track AR(1) theory within 30%.

TEST_CASE("diagnostic-properties") {
  Gate gate("diagnostic-properties");

  Rng rng(9);
  std::vector<double> a(4000), b(4000);
  for (double& x : a) x = rng.normal();
  for (double& x : b) x = 0.1 + rng.normal();
  auto affine = [](std::vector<double> v) {
    for (double& x : v) x = -2.5 * x + 11.0;
    return v;
  };
  gate.expect(std::abs(psrf({a, b}) - psrf({affine(a), affine(b)})) < 1e-10,
              "scalar shrink factor is not affine invariant");
  gate.expect(
      std::abs(std::abs(geweke_z(a)) - std::abs(geweke_z(affine(a)))) < 1e-8,
      "drift score is not affine invariant");

  // permutation invariance of the criteria
  {
    ModelSpec spec;
    spec.p = 1;
    spec.q = 1;
    Group g1, g2;
    g1.unit_id = "1";
    g1.responses = {0.3, 0.5};
    g1.x_rows = {Vector::Ones(1), Vector::Ones(1)};
    g1.z_rows = {Vector::Ones(1), Vector::Ones(1)};
    g2 = g1;
    g2.unit_id = "2";
    g2.responses = {0.6, 0.7};
    const GroupedDataset fwd({g1, g2});
    const GroupedDataset rev({g2, g1});
    ParamState s = ParamState::sized(spec, 2);
    s.beta[0] = 0.1;
    s.b[0][0] = 0.2;
    s.b[1][0] = -0.1;
    s.phi = 8.0;
    ParamState sr = s;
    std::swap(sr.b[0], sr.b[1]);
    auto one_trace = [&](const ParamState& st, const GroupedDataset& d) {
      Trace t;
      const Vector flat = flatten_state(spec, st);
      t.draws = Matrix::Zero(20, flat.size());
      for (int r = 0; r < 20; ++r) t.draws.row(r) = flat.transpose();
      t.deviance.assign(20, deviance(spec, st, d));
      return t;
    };
    const CriteriaReport cf = compute_criteria(spec, fwd, {one_trace(s, fwd)});
    const CriteriaReport cr = compute_criteria(spec, rev, {one_trace(sr, rev)});
    gate.expect(std::abs(cf.dic - cr.dic) < 1e-10, "DIC depends on group order");
    gate.expect(std::abs(cf.eaic - cr.eaic) < 1e-10, "EAIC depends on group order");
    gate.expect(std::abs(cf.ebic - cr.ebic) < 1e-10, "EBIC depends on group order");
  }

  // effective sample size bounds and AR(1) calibration
  {
    std::vector<double> iid(6000);
    for (double& x : iid) x = rng.normal();
    const double e_iid = effective_sample_size(iid);
    gate.expect(e_iid > 0.0 && e_iid <= 6000.0, "iid ESS left (0, n]");

    std::vector<double> slow(60000);
    double x = 0.0;
    const double rho = 0.9, innov = std::sqrt(1.0 - rho * rho);
    for (double& out : slow) {
      x = rho * x + innov * rng.normal();
      out = x;
    }
    const double e_slow = effective_sample_size(slow);
    const double want = 60000.0 * (1.0 - rho) / (1.0 + rho);
    gate.detail << "AR(1) ESS " << fmt("%.0f", e_slow) << " vs theory "
                << fmt("%.0f", want);
    gate.expect(e_slow <= 60000.0, "AR(1) ESS exceeded n");
    gate.expect(std::abs(e_slow - want) / want <= 0.30,
                "AR(1) ESS " + fmt("%.0f", e_slow) + " not within 30% of " +
                    fmt("%.0f", want));
  }

  CHECK(gate.finish());
}
