#include <filesystem>
#include <string>
#include <vector>

#include "betamix/artifact.hpp"
#include "betamix/diagnostics.hpp"
#include "betamix/rng.hpp"
#include "betamix/sampler.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace betamix;
namespace fs = std::filesystem;

TEST_SUITE("artifact") {

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("atomic file write and read back") {
  const fs::path dir = oracles::fresh_dir("artifact-io");
  const fs::path file = dir / "payload.txt";
  atomic_write_file(file, "line one\nline two\n");
  CHECK(read_text_file(file) == "line one\nline two\n");
  atomic_write_file(file, "replaced");
  CHECK(read_text_file(file) == "replaced");
  CHECK_THROWS_AS(read_text_file(dir / "absent.txt"), DataError);
  // no temp litter left behind
  int entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
}

TEST_CASE("trace csv round trips exactly") {
  ModelSpec spec;
  spec.p = 2;
  spec.q = 1;
  const int m = 3;
  Rng rng(9);
  Trace t;
  t.chain_index = 0;
  const auto names = parameter_names(spec, m);
  t.draws = Matrix::Zero(20, static_cast<long>(names.size()));
  t.deviance.resize(20);
  for (int r = 0; r < 20; ++r) {
    for (long c = 0; c < t.draws.cols(); ++c) t.draws(r, c) = rng.normal() * 1e3;
    t.deviance[static_cast<size_t>(r)] = rng.normal();
  }

  const fs::path dir = oracles::fresh_dir("artifact-trace");
  const fs::path file = dir / "trace_chain_1.csv";
  atomic_write_file(file, trace_csv_text(spec, m, t));
  const LoadedTrace back = read_trace_csv(file);
  CHECK(back.names == names);
  REQUIRE(back.draws.rows() == t.draws.rows());
  REQUIRE(back.draws.cols() == t.draws.cols());
  // shortest round-trip formatting means bit-exact recovery
  CHECK((back.draws - t.draws).cwiseAbs().maxCoeff() == 0.0);
  for (int r = 0; r < 20; ++r)
    CHECK(back.deviance[static_cast<size_t>(r)] == t.deviance[static_cast<size_t>(r)]);
}

TEST_CASE("corrupt artifacts raise data errors") {
  const fs::path dir = oracles::fresh_dir("artifact-corrupt");
  atomic_write_file(dir / "trace_chain_1.csv", "beta[1],deviance\n0.5\n");
  CHECK_THROWS_AS(read_trace_csv(dir / "trace_chain_1.csv"), DataError);
  atomic_write_file(dir / "metadata.json", "{ not json");
  CHECK_THROWS_AS(read_run_metadata(dir), DataError);
  CHECK_THROWS_AS(read_run_criteria(dir), DataError);
}

TEST_CASE("run directory round trip") {
  // tiny but real ensemble so the artifact writer sees plausible inputs
  ModelSpec spec;
  spec.p = 1;
  spec.q = 1;
  const int m = 2;

  Rng rng(17);
  const auto names = parameter_names(spec, m);
  std::vector<Trace> traces(2);
  for (int c = 0; c < 2; ++c) {
    Trace& t = traces[static_cast<size_t>(c)];
    t.chain_index = c;
    t.seed = 100 + static_cast<std::uint64_t>(c);
    t.draws = Matrix::Zero(30, static_cast<long>(names.size()));
    t.deviance.resize(30);
    for (int r = 0; r < 30; ++r) {
      for (long j = 0; j < t.draws.cols(); ++j) {
        // phi, Sigma, nu and the mixing weights live on (0, inf)
        const std::string& nm = names[static_cast<size_t>(j)];
        const bool positive = nm == "phi" || nm == "nu_b" ||
                              nm.rfind("Sigma_", 0) == 0 || nm.rfind("lambda_", 0) == 0;
        t.draws(r, j) = positive ? std::exp(0.3 * rng.normal()) : rng.normal();
      }
      t.deviance[static_cast<size_t>(r)] = 50.0 + rng.normal();
    }
    t.acceptance["beta"] = BlockStats{100, 40};
  }

  SamplerConfig cfg;
  cfg.iterations = 40;
  cfg.burn_in = 10;
  cfg.chains = 2;
  cfg.seed = 99;

  DiagnosticsReport report = diagnose(spec, m, traces);
  CriteriaReport crit;
  crit.dbar = 50.0;
  crit.dhat = 45.0;
  crit.p_d = 5.0;
  crit.dic = 55.0;
  crit.eaic = 58.0;
  crit.ebic = 60.0;
  crit.parameter_count = 4;
  crit.n_obs = 8;

  RunInfo info;
  info.label = "roundtrip";
  info.model_file_text = "[location]\nformula = logit(y) ~ 1 + (1 | unit)\n";
  info.data_path = "mem.csv";
  info.data_checksum = fnv1a64("payload");
  info.wall_seconds = 1.25;

  const fs::path dir = oracles::fresh_dir("artifact-run");
  write_run_artifacts(dir, info, spec, m, cfg, traces, report, crit);

  for (const char* name : {"model.ini", "metadata.json", "summary.csv",
                           "diagnostics.csv", "diagnostics.txt", "trace_chain_1.csv",
                           "trace_chain_2.csv", "criteria.csv"})
    CHECK_MESSAGE(fs::exists(dir / name), name, " missing");

  const RunMetadata meta = read_run_metadata(dir);
  CHECK(meta.label == "roundtrip");
  CHECK(meta.seed == 99);
  CHECK(meta.chains == 2);
  CHECK(meta.iterations == 40);
  CHECK(meta.burn_in == 10);
  CHECK(meta.data_checksum == info.data_checksum);
  CHECK(meta.groups == m);
  CHECK(meta.mpsrf == doctest::Approx(report.mpsrf).epsilon(1e-12));
  CHECK(meta.converged == report.converged);

  const CriteriaReport crit_back = read_run_criteria(dir);
  CHECK(crit_back.dic == doctest::Approx(55.0).epsilon(1e-12));
  CHECK(crit_back.eaic == doctest::Approx(58.0).epsilon(1e-12));
  CHECK(crit_back.ebic == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(crit_back.parameter_count == 4);
  CHECK(crit_back.n_obs == 8);

  const LoadedTrace stacked = read_run_traces(dir);
  CHECK(stacked.draws.rows() == 60);
  CHECK(stacked.names == names);
  CHECK(read_text_file(dir / "model.ini") == info.model_file_text);
}

}  // TEST_SUITE
