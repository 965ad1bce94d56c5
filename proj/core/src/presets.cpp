#include "betamix/presets.hpp"

#include <limits>

namespace betamix {

namespace {

SpecFile sim_base(bool student_t) {
  SpecFile f = simulation_spec_file(student_t);
  f.priors.phi.reset();
  f.sampler.iterations = 20000;
  f.sampler.burn_in = 2000;
  f.sampler.thin = 1;
  f.sampler.chains = 2;
  f.sampler.seed = 1;
  return f;
}

SpecFile sim_phi(const PhiPrior& prior) {
  SpecFile f = sim_base(true);
  f.priors.phi = prior;
  return f;
}

SpecFile sim_precision(const std::string& formula, bool tie) {
  SpecFile f = sim_base(true);
  f.precision = parse_formula(formula);
  f.tie_random_scales = tie;
  f.priors.delta = CoefPriorSettings{true, 10.0, 0.0, 10.0};
  f.priors.psi_d_diag = 20.0;
  f.priors.c_d = 5.0;
  return f;
}

SpecFile prater_base() {
  SpecFile f;
  f.location = parse_formula("logit(yield) ~ 1 + EP + (1 | batch)");
  f.b_law = RandomEffectLaw::StudentT;
  f.priors.beta = CoefPriorSettings{true, 10.0, 0.0, 10.0};
  // with ten batches a diag(20) inverse-Wishart scale would pin the batch
  // variance far above anything the 32 yields support
  f.priors.psi_b_diag = 0.2;
  f.priors.c_b = 4.0;
  f.priors.nu_rate = 0.1;
  f.sampler.iterations = 20000;
  f.sampler.burn_in = 2000;
  f.sampler.thin = 1;
  f.sampler.chains = 2;
  f.sampler.seed = 1;
  return f;
}

SpecFile prater_phi(const PhiPrior& prior) {
  SpecFile f = prater_base();
  f.priors.phi = prior;
  return f;
}

SpecFile prater_precision(const std::string& formula, bool tie) {
  SpecFile f = prater_base();
  f.precision = parse_formula(formula);
  f.d_law = RandomEffectLaw::StudentT;
  f.tie_random_scales = tie;
  f.priors.delta = CoefPriorSettings{true, 10.0, 0.0, 10.0};
  f.priors.psi_d_diag = 0.2;
  f.priors.c_d = 4.0;
  return f;
}

struct PresetRow {
  const char* name;
  const char* blurb;
  SpecFile (*make)();
};

const PresetRow kPresets[] = {
    {"model-1a", "simulated design, common phi, inverse-gamma prior",
     [] { return sim_phi(InverseGammaPhiPrior{0.01}); }},
    {"model-1b", "simulated design, common phi, uniform-squared prior",
     [] { return sim_phi(UniformSquaredPhiPrior{50.0}); }},
    {"model-1c", "simulated design, common phi, scaled-beta-squared prior (eps 0.1)",
     [] { return sim_phi(ScaledBetaSquaredPhiPrior{50.0, 0.1}); }},
    {"model-1d", "simulated design, common phi, scaled-beta-squared prior (eps 0.5)",
     [] { return sim_phi(ScaledBetaSquaredPhiPrior{50.0, 0.5}); }},
    {"model-1e", "simulated design, common phi, log-t prior",
     [] { return sim_phi(LogTPhiPrior{10.0, 0.0, 10.0}); }},
    {"model-2a", "simulated design, log-linear precision, intercept only",
     [] { return sim_precision("log(phi) ~ 1", false); }},
    {"model-2b", "simulated design, log-linear precision, random intercept",
     [] { return sim_precision("log(phi) ~ 1 + (1 | unit)", false); }},
    {"model-2c", "simulated design, log-linear precision on x3",
     [] { return sim_precision("log(phi) ~ 1 + x3", false); }},
    {"model-2d", "simulated design, log-linear precision on x2 and x3",
     [] { return sim_precision("log(phi) ~ 1 + x2 + x3", false); }},
    {"model-2e", "simulated design, log-linear precision with shared random scales",
     [] { return sim_precision("log(phi) ~ 1 + x2 + (1 + x2 | unit)", true); }},
    {"prater-1.1", "gasoline yields, common phi, inverse-gamma prior",
     [] { return prater_phi(InverseGammaPhiPrior{0.01}); }},
    {"prater-1.2", "gasoline yields, common phi, uniform-squared prior",
     [] { return prater_phi(UniformSquaredPhiPrior{50.0}); }},
    {"prater-1.3", "gasoline yields, common phi, scaled-beta-squared prior (eps 0.1)",
     [] { return prater_phi(ScaledBetaSquaredPhiPrior{50.0, 0.1}); }},
    {"prater-1.4", "gasoline yields, common phi, scaled-beta-squared prior (eps 0.5)",
     [] { return prater_phi(ScaledBetaSquaredPhiPrior{50.0, 0.5}); }},
    {"prater-2.1", "gasoline yields, log-linear precision, intercept only",
     [] { return prater_precision("log(phi) ~ 1", false); }},
    {"prater-2.2", "gasoline yields, log-linear precision, random intercept",
     [] { return prater_precision("log(phi) ~ 1 + (1 | batch)", true); }},
    {"prater-2.3", "gasoline yields, log-linear precision on the end point",
     [] { return prater_precision("log(phi) ~ EP", false); }},
    {"prater-2.4", "gasoline yields, log-linear precision, intercept and end point",
     [] { return prater_precision("log(phi) ~ 1 + EP", false); }},
    {"prater-2.5", "gasoline yields, log-linear precision, end point and random intercept",
     [] { return prater_precision("log(phi) ~ EP + (1 | batch)", true); }},
    {"prater-2.6", "gasoline yields, log-linear precision, full submodel",
     [] { return prater_precision("log(phi) ~ 1 + EP + (1 | batch)", true); }},
};

[[noreturn]] void unknown_preset(const std::string& name,
                                 const std::vector<std::string>& known) {
  std::string msg = "unknown preset '" + name + "'; available:";
  for (const std::string& n : known) msg += " " + n;
  throw SpecError(msg);
}

}  // namespace

std::vector<std::string> model_preset_names() {
  std::vector<std::string> names;
  for (const PresetRow& row : kPresets) names.push_back(row.name);
  return names;
}

bool is_model_preset(const std::string& name) {
  for (const PresetRow& row : kPresets)
    if (name == row.name) return true;
  return false;
}

SpecFile model_preset(const std::string& name) {
  for (const PresetRow& row : kPresets)
    if (name == row.name) return row.make();
  unknown_preset(name, model_preset_names());
}

std::string model_preset_text(const std::string& name) {
  return render_spec_file(model_preset(name));
}

std::string model_preset_blurb(const std::string& name) {
  for (const PresetRow& row : kPresets)
    if (name == row.name) return row.blurb;
  unknown_preset(name, model_preset_names());
}

std::vector<std::string> simulate_preset_names() {
  return {"paper-sim", "paper-sim-normal", "desk-sim", "desk-sim-normal"};
}

GenConfig simulate_preset(const std::string& name) {
  GenConfig g;
  if (name == "paper-sim") return g;
  if (name == "paper-sim-normal") {
    g.nu_true = std::numeric_limits<double>::infinity();
    return g;
  }
  if (name == "desk-sim") {
    g.m = 50;
    return g;
  }
  if (name == "desk-sim-normal") {
    g.m = 50;
    g.nu_true = std::numeric_limits<double>::infinity();
    return g;
  }
  unknown_preset(name, simulate_preset_names());
}

}  // namespace betamix
