// Microbenchmarks for the hot paths of the sampler: density evaluation,
// whole-dataset likelihood, conjugate draws, and full Gibbs sweeps.

#include <benchmark/benchmark.h>

#include <limits>

#include "betamix/criteria.hpp"
#include "betamix/diagnostics.hpp"
#include "betamix/model.hpp"
#include "betamix/sampler.hpp"
#include "betamix/simulate.hpp"
#include "betamix/specdsl.hpp"

using namespace betamix;

namespace {

SimulatedData study_data(int m) {
  GenConfig gen;
  gen.m = m;
  gen.n_per_group = 5;
  gen.seed = 1;
  return generate_dataset(gen);
}

struct Problem {
  ModelSpec spec;
  PriorCatalog catalog;
  GroupedDataset data;
  ParamState state;
};

Problem study_problem(int m) {
  const SimulatedData sim = study_data(m);
  const SpecFile file = simulation_spec_file(true);
  const DesignBuild build = build_design(file, sim.table);
  Problem p{build.spec, bind_priors(file, build.spec), build.data,
            ParamState::sized(build.spec, build.data.m())};
  p.state = sim.truth;
  return p;
}

void BM_BetaLogPdf(benchmark::State& state) {
  const BetaMP law(0.37, 49.0);
  double y = 0.123, acc = 0.0;
  for (auto _ : state) {
    acc += beta_mp_log_pdf(y, law);
    y = y < 0.9 ? y + 0.001 : 0.1;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_BetaLogPdf);

void BM_LogLikelihood(benchmark::State& state) {
  const Problem p = study_problem(static_cast<int>(state.range(0)));
  double acc = 0.0;
  for (auto _ : state) acc += log_likelihood(p.spec, p.state, p.data);
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations() * p.data.total_observations());
}
BENCHMARK(BM_LogLikelihood)->Arg(50)->Arg(100);

void BM_ConjugateSigma(benchmark::State& state) {
  Rng rng(3);
  const Matrix psi = 20.0 * Matrix::Identity(2, 2);
  std::vector<Vector> effects(50);
  Vector lambdas(50);
  for (int i = 0; i < 50; ++i) {
    effects[static_cast<size_t>(i)] = (Vector(2) << rng.normal(), rng.normal()).finished();
    lambdas[i] = rng.gamma(5.0, 5.0);
  }
  Matrix acc = Matrix::Zero(2, 2);
  for (auto _ : state) acc += conjugate_sigma_draw(psi, 5.0, effects, lambdas, rng);
  benchmark::DoNotOptimize(acc.sum());
}
BENCHMARK(BM_ConjugateSigma);

void BM_GibbsSweep(benchmark::State& state) {
  // cost per kept iteration, amortised over a short real run
  const Problem p = study_problem(static_cast<int>(state.range(0)));
  SamplerConfig cfg;
  cfg.iterations = 200;
  cfg.burn_in = 100;
  cfg.chains = 1;
  cfg.seed = 7;
  for (auto _ : state) {
    const Trace t = run_chain(p.spec, p.catalog, p.data, cfg, 0);
    benchmark::DoNotOptimize(t.draws(0, 0));
  }
  state.SetItemsProcessed(state.iterations() * cfg.iterations);
}
BENCHMARK(BM_GibbsSweep)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Mpsrf(benchmark::State& state) {
  Rng rng(11);
  const int n = 2000, k = 12;
  std::vector<Matrix> chains(2, Matrix(n, k));
  for (Matrix& c : chains)
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < k; ++j) c(r, j) = rng.normal();
  double acc = 0.0;
  for (auto _ : state) acc += mpsrf(chains);
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_Mpsrf);

void BM_EffectiveSampleSize(benchmark::State& state) {
  Rng rng(13);
  std::vector<double> draws(20000);
  double x = 0.0;
  for (double& d : draws) {
    x = 0.7 * x + rng.normal();
    d = x;
  }
  double acc = 0.0;
  for (auto _ : state) acc += effective_sample_size(draws);
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_EffectiveSampleSize);

}  // namespace

BENCHMARK_MAIN();
