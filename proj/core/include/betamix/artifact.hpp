#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "betamix/criteria.hpp"
#include "betamix/diagnostics.hpp"
#include "betamix/specdsl.hpp"

namespace betamix {

std::uint64_t fnv1a64(std::string_view bytes);
std::string timestamp_utc();

// write-to-temp-then-rename so readers never observe a partial file
void atomic_write_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);  // throws DataError

struct RunInfo {
  std::string label;
  std::string model_file_text;  // exact text the run used
  std::string data_path;
  std::uint64_t data_checksum = 0;
  double wall_seconds = 0.0;
};

// A completed fit is a directory:
//   model.ini         the model file that produced the run
//   metadata.json     seed, data checksum, acceptance rates, shrink verdict
//   trace_chain_K.csv one row per retained draw plus a deviance column
//   summary.csv       posterior summaries per parameter
//   diagnostics.csv   convergence measures per parameter
//   diagnostics.txt   the same, human readable
//   criteria.csv      deviance information criteria
void write_run_artifacts(const std::filesystem::path& dir, const RunInfo& info,
                         const ModelSpec& spec, int m, const SamplerConfig& config,
                         const std::vector<Trace>& traces, const DiagnosticsReport& report,
                         const CriteriaReport& criteria);

std::string trace_csv_text(const ModelSpec& spec, int m, const Trace& trace);

struct LoadedTrace {
  std::vector<std::string> names;  // deviance excluded
  Matrix draws;
  std::vector<double> deviance;
};
LoadedTrace read_trace_csv(const std::filesystem::path& file);
// every chain of a run stacked in chain order
LoadedTrace read_run_traces(const std::filesystem::path& dir);

struct RunMetadata {
  std::string label;
  std::uint64_t seed = 0;
  int chains = 0;
  long iterations = 0, burn_in = 0, thin = 0;
  std::string data_path;
  std::uint64_t data_checksum = 0;
  long n_obs = 0;
  int groups = 0;
  double mpsrf = 0.0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::string location_formula;
  std::string precision_formula;  // empty for common-precision models
};

RunMetadata read_run_metadata(const std::filesystem::path& dir);
CriteriaReport read_run_criteria(const std::filesystem::path& dir);

}  // namespace betamix
