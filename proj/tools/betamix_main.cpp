// betamix: Bayesian mixed-effects beta regression from the command line.
//
//   simulate   draw a synthetic grouped dataset and its ground truth
//   fit        run the Gibbs/Metropolis sampler and write a run directory
//   compare    rank completed runs on one dataset by DIC
//   density    kernel density of one parameter from a run's traces
//   replicate  repeated simulate+fit under both random-effect laws
//   preset     list/show/export the built-in model files

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "betamix/artifact.hpp"
#include "betamix/criteria.hpp"
#include "betamix/diagnostics.hpp"
#include "betamix/presets.hpp"
#include "betamix/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace betamix;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitSpecOrData = 2;
constexpr int kExitSampler = 3;

std::vector<double> parse_csv_numbers(const std::string& text, size_t want,
                                      const std::string& what) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw SpecError(what + ": '" + cell + "' is not a number");
    }
  }
  if (out.size() != want)
    throw SpecError(what + ": expected " + std::to_string(want) + " comma-separated values");
  return out;
}

std::string law_name(RandomEffectLaw law) {
  return law == RandomEffectLaw::StudentT ? "student_t" : "normal";
}

bool headline_param(const std::string& name) {
  return name.rfind("b.", 0) != 0 && name.rfind("d.", 0) != 0 &&
         name.rfind("lambda_", 0) != 0;
}

// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::string preset;
  std::optional<int> m, n;
  std::optional<std::string> beta, sigma, nu;
  std::optional<double> phi;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_simulate(const SimulateOpts& opts) {
  GenConfig g = opts.preset.empty() ? GenConfig{} : simulate_preset(opts.preset);
  if (opts.m) g.m = *opts.m;
  if (opts.n) g.n_per_group = *opts.n;
  if (opts.phi) g.phi_true = *opts.phi;
  if (opts.seed) g.seed = *opts.seed;
  if (opts.beta) {
    const auto v = parse_csv_numbers(*opts.beta, 3, "--beta");
    g.beta_true = Eigen::Map<const Vector>(v.data(), 3);
  }
  if (opts.sigma) {
    const auto v = parse_csv_numbers(*opts.sigma, 3, "--sigma");
    g.sigma_true << v[0], v[1], v[1], v[2];
  }
  if (opts.nu) {
    if (*opts.nu == "inf" || *opts.nu == "normal")
      g.nu_true = std::numeric_limits<double>::infinity();
    else
      g.nu_true = std::stod(*opts.nu);
  }

  const SimulatedData sim = generate_dataset(g);
  std::ostringstream csv;
  {
    std::vector<std::vector<std::string>> rows;
    for (size_t r = 0; r < sim.table.n_rows(); ++r) {
      std::vector<std::string> row;
      for (size_t c = 0; c < sim.table.columns().size(); ++c)
        row.push_back(sim.table.cell(r, static_cast<int>(c)));
      rows.push_back(std::move(row));
    }
    write_csv(csv, sim.table.columns(), rows);
  }
  const fs::path out_path(opts.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  atomic_write_file(out_path, csv.str());

  json truth;
  truth["seed"] = g.seed;
  truth["m"] = g.m;
  truth["n_per_group"] = g.n_per_group;
  truth["beta"] = {g.beta_true[0], g.beta_true[1], g.beta_true[2]};
  truth["phi"] = g.phi_true;
  truth["nu"] = std::isfinite(g.nu_true) ? json(g.nu_true) : json(nullptr);
  truth["sigma"] = {{g.sigma_true(0, 0), g.sigma_true(0, 1)},
                    {g.sigma_true(1, 0), g.sigma_true(1, 1)}};
  json b = json::array();
  for (const Vector& bi : sim.truth.b) b.push_back({bi[0], bi[1]});
  truth["b"] = b;
  fs::path truth_path = out_path;
  truth_path.replace_extension(".truth.json");
  atomic_write_file(truth_path, truth.dump(2) + "\n");

  std::cout << "wrote " << out_path.string() << " (" << sim.table.n_rows()
            << " rows, " << g.m << " groups)\n";
  std::cout << "wrote " << truth_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct FitOpts {
  std::string data, spec, label, out;
  std::optional<long> iterations, burn_in, thin, adapt_window;
  std::optional<int> chains, threads;
  std::optional<std::uint64_t> seed;
};

int cmd_fit(const FitOpts& opts) {
  std::string spec_text, label = opts.label;
  if (opts.spec.rfind("preset:", 0) == 0) {
    const std::string name = opts.spec.substr(7);
    spec_text = model_preset_text(name);
    if (label.empty()) label = name;
  } else {
    spec_text = read_text_file(opts.spec);
    if (label.empty()) label = fs::path(opts.spec).stem().string();
  }
  SpecFile file = parse_spec_file(spec_text);
  if (opts.iterations) file.sampler.iterations = *opts.iterations;
  if (opts.burn_in)
    file.sampler.burn_in = *opts.burn_in;
  else if (opts.iterations)
    file.sampler.burn_in = file.sampler.iterations / 10;
  if (opts.thin) file.sampler.thin = *opts.thin;
  if (opts.chains) file.sampler.chains = *opts.chains;
  if (opts.seed) file.sampler.seed = *opts.seed;
  if (opts.adapt_window) file.sampler.adapt_window = *opts.adapt_window;
  if (opts.threads) file.sampler.threads = *opts.threads;
  file.sampler.validate();

  fs::path out_dir;
  if (!opts.out.empty()) {
    out_dir = opts.out;
  } else if (const char* root = std::getenv("BETAMIX_OUT_ROOT")) {
    out_dir = fs::path(root) / (label + "-seed" + std::to_string(file.sampler.seed));
  } else {
    throw SpecError("no --out directory given and BETAMIX_OUT_ROOT is not set");
  }

  const std::string data_bytes = read_text_file(opts.data);
  std::istringstream data_stream(data_bytes);
  const Table table = Table::read_csv(data_stream, opts.data);
  const DesignBuild design = build_design(file, table);
  const PriorCatalog catalog = bind_priors(file, design.spec);

  std::cout << "model:     " << format_formula(file.location);
  if (file.precision) std::cout << "  |  " << format_formula(*file.precision);
  std::cout << "\nlaws:      b ~ " << law_name(file.b_law);
  if (design.spec.has_d())
    std::cout << ", d ~ " << law_name(file.d_law)
              << (file.tie_random_scales ? " (tied scales)" : "");
  std::cout << "\ndata:      " << opts.data << " (" << design.data.total_observations()
            << " obs, " << design.data.m() << " groups)\n";
  std::cout << "sampler:   " << file.sampler.chains << " chains x "
            << file.sampler.iterations << " iterations, burn-in "
            << file.sampler.burn_in << ", thin " << file.sampler.thin << ", seed "
            << file.sampler.seed << "\n";

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Trace> traces =
      run_ensemble(design.spec, catalog, design.data, file.sampler);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const DiagnosticsReport report = diagnose(design.spec, design.data.m(), traces);
  const CriteriaReport criteria = compute_criteria(design.spec, design.data, traces);

  RunInfo info;
  info.label = label;
  info.model_file_text = render_spec_file(file);
  info.data_path = opts.data;
  info.data_checksum = fnv1a64(data_bytes);
  info.wall_seconds = wall;
  write_run_artifacts(out_dir, info, design.spec, design.data.m(), file.sampler, traces,
                      report, criteria);

  std::cout << "\nparam                  mean        sd     2.5%     97.5%    psrf\n";
  for (const ParamDiagnostics& p : report.params) {
    if (!headline_param(p.name)) continue;
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %9.4f %9.4f %8.4f %9.4f  %6.4f\n",
                  p.name.c_str(), p.stats.mean, p.stats.sd, p.stats.q025, p.stats.q975,
                  p.psrf);
    std::cout << line;
  }
  std::cout << "\nDIC " << format_double(criteria.dic) << "  (dbar "
            << format_double(criteria.dbar) << ", p_D " << format_double(criteria.p_d)
            << ")  EAIC " << format_double(criteria.eaic) << "  EBIC "
            << format_double(criteria.ebic) << "\n";
  std::cout << "mpsrf " << format_double(report.mpsrf) << " -> "
            << (report.converged ? "run accepted" : "RUN NOT CONVERGED; treat as invalid")
            << "\n";
  for (const std::string& w : report.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "wall time " << format_double(wall) << " s\n";
  std::cout << "run directory: " << out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_compare(const std::vector<std::string>& runs, const std::string& out) {
  if (runs.size() < 2) throw SpecError("compare needs at least two --run directories");
  struct Row {
    std::string dir, label;
    CriteriaReport crit;
    RunMetadata meta;
  };
  std::vector<Row> rows;
  for (const std::string& r : runs) {
    Row row;
    row.dir = r;
    row.meta = read_run_metadata(r);
    row.crit = read_run_criteria(r);
    row.label = row.meta.label.empty() ? r : row.meta.label;
    rows.push_back(std::move(row));
  }
  for (const Row& row : rows)
    if (row.meta.data_checksum != rows.front().meta.data_checksum)
      throw DataError("runs '" + rows.front().dir + "' and '" + row.dir +
                      "' were fit on different datasets");
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.crit.dic < b.crit.dic; });

  std::cout << "rank  label                 DIC        p_D     EAIC      EBIC   converged\n";
  std::ostringstream csv;
  csv << "rank,label,dic,p_d,eaic,ebic,converged,run_dir\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    char line[200];
    std::snprintf(line, sizeof line, "%4zu  %-18s %9.3f %8.3f %9.3f %9.3f   %s\n", i + 1,
                  row.label.c_str(), row.crit.dic, row.crit.p_d, row.crit.eaic,
                  row.crit.ebic, row.meta.converged ? "yes" : "NO");
    std::cout << line;
    csv << (i + 1) << ',' << row.label << ',' << format_double(row.crit.dic) << ','
        << format_double(row.crit.p_d) << ',' << format_double(row.crit.eaic) << ','
        << format_double(row.crit.ebic) << ',' << (row.meta.converged ? 1 : 0) << ','
        << row.dir << '\n';
  }
  if (!out.empty()) {
    atomic_write_file(out, csv.str());
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_density(const std::string& run, const std::string& param, int points,
                const std::string& out) {
  const LoadedTrace pooled = read_run_traces(run);
  int col = -1;
  for (size_t i = 0; i < pooled.names.size(); ++i)
    if (pooled.names[i] == param) col = static_cast<int>(i);
  std::vector<double> draws;
  if (col >= 0) {
    draws.resize(static_cast<size_t>(pooled.draws.rows()));
    for (long r = 0; r < pooled.draws.rows(); ++r)
      draws[static_cast<size_t>(r)] = pooled.draws(r, col);
  } else if (param == "deviance") {
    draws = pooled.deviance;
  } else {
    throw DataError("parameter '" + param + "' not found in the run's traces");
  }
  const std::vector<DensityPoint> grid = kernel_density(draws, points);
  std::ostringstream csv;
  csv << "x,density\n";
  for (const DensityPoint& p : grid)
    csv << format_double(p.x) << ',' << format_double(p.density) << '\n';
  if (out.empty())
    std::cout << csv.str();
  else {
    atomic_write_file(out, csv.str());
    std::cout << "wrote " << out << " (" << points << " points)\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ReplicateOpts {
  std::string nu = "10";
  int reps = 20;
  std::optional<int> m, n;
  std::string budget = "desk";
  bool freeze_covariates = false;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_replicate(const ReplicateOpts& opts) {
  GenConfig g;
  g.m = opts.m.value_or(50);
  g.n_per_group = opts.n.value_or(5);
  if (opts.nu == "inf" || opts.nu == "normal")
    g.nu_true = std::numeric_limits<double>::infinity();
  else
    g.nu_true = std::stod(opts.nu);
  if (opts.seed) g.seed = *opts.seed;
  if (opts.freeze_covariates) g.covariate_seed = g.seed;

  SamplerConfig budget;
  budget.chains = 1;
  if (opts.budget == "tiny") {
    budget.iterations = 3000;
    budget.burn_in = 1000;
  } else if (opts.budget == "desk") {
    budget.iterations = 8000;
    budget.burn_in = 2000;
  } else if (opts.budget == "paper") {
    budget.iterations = 100000;
    budget.burn_in = 10000;
    budget.thin = 10;
    budget.chains = 2;
  } else {
    throw SpecError("unknown budget '" + opts.budget + "' (tiny, desk, paper)");
  }

  const ReplicationResult res = replication_study(
      g, opts.reps, budget, [&](int done) {
        std::cerr << "\rreplicate " << done << "/" << opts.reps << std::flush;
        if (done == opts.reps) std::cerr << "\n";
      });

  std::ostringstream table;
  table << "family,param,bias,rmse\n";
  auto emit = [&](const FamilySummary& fam) {
    for (const auto& [name, bias] : fam.bias)
      table << fam.label << ',' << name << ',' << format_double(bias) << ','
            << format_double(fam.rmse.at(name)) << '\n';
  };
  emit(res.student_t);
  emit(res.normal);

  std::ostringstream crit;
  crit << "family,mean_dic,mean_eaic,mean_ebic,completed,failed\n";
  for (const FamilySummary* fam : {&res.student_t, &res.normal})
    crit << fam->label << ',' << format_double(fam->mean_dic) << ','
         << format_double(fam->mean_eaic) << ',' << format_double(fam->mean_ebic) << ','
         << fam->completed << ',' << fam->failed << '\n';

  fs::create_directories(opts.out);
  atomic_write_file(fs::path(opts.out) / "replication_errors.csv", table.str());
  atomic_write_file(fs::path(opts.out) / "replication_criteria.csv", crit.str());

  std::cout << "generator nu: " << opts.nu << ", replicates: " << opts.reps << "\n";
  std::cout << "family     mean DIC   mean EAIC  mean EBIC  completed failed\n";
  for (const FamilySummary* fam : {&res.student_t, &res.normal}) {
    char line[160];
    std::snprintf(line, sizeof line, "%-9s %10.3f %10.3f %10.3f %6d %6d\n",
                  fam->label.c_str(), fam->mean_dic, fam->mean_eaic, fam->mean_ebic,
                  fam->completed, fam->failed);
    std::cout << line;
  }
  std::cout << "DIC gap (student_t - normal): "
            << format_double(res.student_t.mean_dic - res.normal.mean_dic) << "\n";
  std::cout << "wrote " << (fs::path(opts.out) / "replication_errors.csv").string() << "\n";
  std::cout << "wrote " << (fs::path(opts.out) / "replication_criteria.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_preset_list() {
  std::cout << "model presets (use with fit --spec preset:NAME)\n";
  for (const std::string& name : model_preset_names()) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-12s %s\n", name.c_str(),
                  model_preset_blurb(name).c_str());
    std::cout << line;
  }
  std::cout << "generator presets (use with simulate --preset NAME)\n";
  for (const std::string& name : simulate_preset_names())
    std::cout << "  " << name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian mixed-effects beta regression"};
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand("simulate", "draw a synthetic grouped dataset");
  simulate->add_option("--preset", sim.preset, "generator preset name");
  simulate->add_option("--m", sim.m, "number of groups");
  simulate->add_option("--n", sim.n, "observations per group");
  simulate->add_option("--beta", sim.beta, "true coefficients b1,b2,b3");
  simulate->add_option("--phi", sim.phi, "true precision");
  simulate->add_option("--nu", sim.nu, "true dof, or 'inf' for normal effects");
  simulate->add_option("--sigma", sim.sigma, "true covariance s11,s12,s22");
  simulate->add_option("--seed", sim.seed, "generator seed");
  simulate->add_option("--out", sim.out, "output CSV path")->required();

  FitOpts fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "run the sampler on a dataset");
  fit_cmd->add_option("--data", fit.data, "CSV dataset")->required();
  fit_cmd->add_option("--spec", fit.spec, "model file path or preset:NAME")->required();
  fit_cmd->add_option("--iterations", fit.iterations, "iterations per chain");
  fit_cmd->add_option("--burn-in", fit.burn_in, "burn-in iterations");
  fit_cmd->add_option("--thin", fit.thin, "thinning stride");
  fit_cmd->add_option("--chains", fit.chains, "number of chains");
  fit_cmd->add_option("--seed", fit.seed, "ensemble seed");
  fit_cmd->add_option("--adapt-window", fit.adapt_window, "adaptation window");
  fit_cmd->add_option("--threads", fit.threads, "worker threads (0 = auto)");
  fit_cmd->add_option("--label", fit.label, "run label");
  fit_cmd->add_option("--out", fit.out, "run directory (default $BETAMIX_OUT_ROOT/label-seedN)");

  std::vector<std::string> compare_runs;
  std::string compare_out;
  CLI::App* compare = app.add_subcommand("compare", "rank runs on one dataset by DIC");
  compare->add_option("--run", compare_runs, "run directory (repeat)")->required();
  compare->add_option("--out", compare_out, "write the ranking as CSV");

  std::string density_run, density_param, density_out;
  int density_points = 128;
  CLI::App* density = app.add_subcommand("density", "kernel density of one parameter");
  density->add_option("--run", density_run, "run directory")->required();
  density->add_option("--param", density_param, "parameter name")->required();
  density->add_option("--points", density_points, "grid size");
  density->add_option("--out", density_out, "output CSV (default stdout)");

  ReplicateOpts rep;
  CLI::App* replicate = app.add_subcommand("replicate", "repeated simulate+fit study");
  replicate->add_option("--nu", rep.nu, "generator dof, or 'inf'");
  replicate->add_option("--reps", rep.reps, "number of replicates");
  replicate->add_option("--m", rep.m, "groups per replicate");
  replicate->add_option("--n", rep.n, "observations per group");
  replicate->add_option("--budget", rep.budget, "tiny, desk or paper");
  replicate->add_flag("--freeze-covariates", rep.freeze_covariates,
                      "share one covariate design across replicates");
  replicate->add_option("--seed", rep.seed, "base seed");
  replicate->add_option("--out", rep.out, "output directory")->required();

  CLI::App* preset = app.add_subcommand("preset", "built-in model files");
  CLI::App* preset_list = preset->add_subcommand("list", "names and one-liners");
  std::string preset_name;
  CLI::App* preset_show = preset->add_subcommand("show", "print one model file");
  preset_show->add_option("name", preset_name, "preset name")->required();
  std::string export_dir;
  CLI::App* preset_export = preset->add_subcommand("export", "write all model files");
  preset_export->add_option("--dir", export_dir, "target directory")->required();
  preset->require_subcommand(1);

  try {
    app.parse(argc, argv);
    if (*simulate) return cmd_simulate(sim);
    if (*fit_cmd) return cmd_fit(fit);
    if (*compare) return cmd_compare(compare_runs, compare_out);
    if (*density) return cmd_density(density_run, density_param, density_points, density_out);
    if (*replicate) return cmd_replicate(rep);
    if (*preset_list) return cmd_preset_list();
    if (*preset_show) {
      std::cout << model_preset_text(preset_name);
      return 0;
    }
    if (*preset_export) {
      fs::create_directories(export_dir);
      for (const std::string& name : model_preset_names()) {
        atomic_write_file(fs::path(export_dir) / (name + ".ini"), model_preset_text(name));
        std::cout << "wrote " << (fs::path(export_dir) / (name + ".ini")).string() << "\n";
      }
      return 0;
    }
    return kExitUsage;
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SamplerError& e) {
    std::cerr << "sampler error: " << e.what() << "\n";
    return kExitSampler;
  } catch (const SpecError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitSpecOrData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitSpecOrData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitSampler;
  }
}
