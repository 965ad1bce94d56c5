#include "betamix/artifact.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace betamix {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void atomic_write_file(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write to '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------

std::string trace_csv_text(const ModelSpec& spec, int m, const Trace& trace) {
  const std::vector<std::string> names = parameter_names(spec, m);
  if (trace.draws.cols() != static_cast<long>(names.size()))
    throw std::invalid_argument("trace_csv_text: trace width mismatch");
  std::ostringstream out;
  for (const std::string& n : names) out << n << ',';
  out << "deviance\n";
  for (long r = 0; r < trace.draws.rows(); ++r) {
    for (long c = 0; c < trace.draws.cols(); ++c)
      out << format_double(trace.draws(r, c)) << ',';
    out << format_double(trace.deviance[static_cast<size_t>(r)]) << '\n';
  }
  return out.str();
}

LoadedTrace read_trace_csv(const fs::path& file) {
  const std::string text = read_text_file(file);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(file.string() + ": empty trace");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  LoadedTrace out;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) out.names.push_back(cell);
  }
  if (out.names.empty() || out.names.back() != "deviance")
    throw DataError(file.string() + ": last trace column must be deviance");
  out.names.pop_back();
  const size_t width = out.names.size() + 1;
  std::vector<double> values;
  size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t start = 0, count = 0;
    while (start <= line.size()) {
      size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      double v = 0.0;
      auto [p, ec] = std::from_chars(line.data() + start, line.data() + comma, v);
      if (ec != std::errc() || p != line.data() + comma)
        throw DataError(file.string() + ": bad number in row " + std::to_string(rows + 1));
      values.push_back(v);
      ++count;
      start = comma + 1;
      if (comma == line.size()) break;
    }
    if (count != width)
      throw DataError(file.string() + ": row " + std::to_string(rows + 1) + " has " +
                      std::to_string(count) + " cells, expected " + std::to_string(width));
    ++rows;
  }
  out.draws.resize(static_cast<long>(rows), static_cast<long>(width - 1));
  out.deviance.resize(rows);
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c + 1 < width; ++c)
      out.draws(static_cast<long>(r), static_cast<long>(c)) = values[r * width + c];
    out.deviance[r] = values[r * width + width - 1];
  }
  return out;
}

LoadedTrace read_run_traces(const fs::path& dir) {
  std::vector<fs::path> files;
  for (int k = 1;; ++k) {
    fs::path f = dir / ("trace_chain_" + std::to_string(k) + ".csv");
    if (!fs::exists(f)) break;
    files.push_back(f);
  }
  if (files.empty()) throw DataError("no trace files under '" + dir.string() + "'");
  LoadedTrace pooled = read_trace_csv(files.front());
  for (size_t k = 1; k < files.size(); ++k) {
    LoadedTrace next = read_trace_csv(files[k]);
    if (next.names != pooled.names)
      throw DataError("trace files under '" + dir.string() + "' disagree on columns");
    const long n0 = pooled.draws.rows();
    Matrix joined(n0 + next.draws.rows(), pooled.draws.cols());
    joined.topRows(n0) = pooled.draws;
    joined.bottomRows(next.draws.rows()) = next.draws;
    pooled.draws = std::move(joined);
    pooled.deviance.insert(pooled.deviance.end(), next.deviance.begin(), next.deviance.end());
  }
  return pooled;
}

// ---------------------------------------------------------------------------

namespace {

std::string checksum_text(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t checksum_parse(const std::string& s) {
  return std::strtoull(s.c_str(), nullptr, 16);
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string summary_csv(const DiagnosticsReport& report) {
  std::ostringstream out;
  out << "param,mean,sd,mc_error,median,q2.5,q97.5\n";
  auto row = [&](const std::string& name, const SummaryStats& s) {
    out << name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ','
        << format_double(s.mc_error) << ',' << format_double(s.median) << ','
        << format_double(s.q025) << ',' << format_double(s.q975) << '\n';
  };
  for (const ParamDiagnostics& p : report.params) row(p.name, p.stats);
  row("deviance", report.deviance);
  return out.str();
}

std::string diagnostics_csv(const DiagnosticsReport& report) {
  std::ostringstream out;
  out << "param,psrf,ess,geweke_z,heidel_stationary,heidel_kept,heidel_halfwidth_ok\n";
  for (const ParamDiagnostics& p : report.params) {
    out << p.name << ',' << format_double(p.psrf) << ',' << format_double(p.ess) << ','
        << format_double(p.geweke_worst) << ',' << (p.heidel_all_stationary ? 1 : 0) << ','
        << format_double(p.heidel_kept_min) << ',' << (p.heidel_halfwidth_all ? 1 : 0)
        << '\n';
  }
  return out.str();
}

std::string diagnostics_text(const DiagnosticsReport& report,
                             const std::vector<Trace>& traces) {
  std::ostringstream out;
  out << "multivariate shrink factor: " << format_double(report.mpsrf) << " (threshold "
      << format_double(report.mpsrf_threshold) << ") -> "
      << (report.converged ? "converged" : "NOT converged") << "\n\n";
  out << "param                     psrf      ess   geweke  heidel\n";
  for (const ParamDiagnostics& p : report.params) {
    char line[128];
    std::snprintf(line, sizeof line, "%-22s %7.4f %8.1f %8.3f  %s\n", p.name.c_str(),
                  p.psrf, p.ess, p.geweke_worst,
                  p.heidel_all_stationary ? "stationary" : "drifting");
    out << line;
  }
  out << "\nacceptance rates after adaptation\n";
  for (const Trace& t : traces) {
    out << "  chain " << t.chain_index << ":";
    for (const auto& [name, stats] : t.acceptance) {
      char item[64];
      std::snprintf(item, sizeof item, " %s=%.3f", name.c_str(), stats.rate());
      out << item;
    }
    out << "\n";
  }
  if (!report.warnings.empty()) {
    out << "\nwarnings\n";
    for (const std::string& w : report.warnings) out << "  " << w << "\n";
  }
  return out.str();
}

std::string criteria_csv(const CriteriaReport& c) {
  std::ostringstream out;
  out << "dbar,dhat,p_d,dic,eaic,ebic,parameter_count,n_obs\n";
  out << format_double(c.dbar) << ',' << format_double(c.dhat) << ','
      << format_double(c.p_d) << ',' << format_double(c.dic) << ','
      << format_double(c.eaic) << ',' << format_double(c.ebic) << ','
      << c.parameter_count << ',' << c.n_obs << '\n';
  return out.str();
}

}  // namespace

void write_run_artifacts(const fs::path& dir, const RunInfo& info, const ModelSpec& spec,
                         int m, const SamplerConfig& config, const std::vector<Trace>& traces,
                         const DiagnosticsReport& report, const CriteriaReport& criteria) {
  fs::create_directories(dir);
  atomic_write_file(dir / "model.ini", info.model_file_text);

  for (const Trace& t : traces)
    atomic_write_file(dir / ("trace_chain_" + std::to_string(t.chain_index + 1) + ".csv"),
                      trace_csv_text(spec, m, t));

  atomic_write_file(dir / "summary.csv", summary_csv(report));
  atomic_write_file(dir / "diagnostics.csv", diagnostics_csv(report));
  atomic_write_file(dir / "diagnostics.txt", diagnostics_text(report, traces));
  atomic_write_file(dir / "criteria.csv", criteria_csv(criteria));

  json meta;
  meta["label"] = info.label;
  meta["created_utc"] = timestamp_utc();
  meta["engine_version"] = "0.1.0";
  meta["seed"] = config.seed;
  meta["chains"] = config.chains;
  meta["iterations"] = config.iterations;
  meta["burn_in"] = config.burn_in;
  meta["thin"] = config.thin;
  meta["adapt_window"] = config.adapt_window;
  meta["data"] = {{"path", info.data_path},
                  {"checksum_fnv1a64", checksum_text(info.data_checksum)},
                  {"n_obs", criteria.n_obs},
                  {"groups", m}};
  json model;
  model["p"] = spec.p;
  model["q"] = spec.q;
  model["b_law"] = spec.b_law == RandomEffectLaw::StudentT ? "student_t" : "normal";
  if (spec.precision.regression) {
    model["p_star"] = spec.precision.p_star;
    model["q_star"] = spec.precision.q_star;
    model["d_law"] = spec.d_law == RandomEffectLaw::StudentT ? "student_t" : "normal";
    model["tie_random_scales"] = spec.tie_random_scales;
  }
  meta["model"] = model;
  meta["mpsrf"] = finite_or_null(report.mpsrf);
  meta["mpsrf_threshold"] = report.mpsrf_threshold;
  meta["converged"] = report.converged;
  meta["wall_seconds"] = info.wall_seconds;
  {
    json acc;
    std::map<std::string, BlockStats> merged;
    for (const Trace& t : traces)
      for (const auto& [name, stats] : t.acceptance) {
        merged[name].proposals += stats.proposals;
        merged[name].accepts += stats.accepts;
      }
    for (const auto& [name, stats] : merged) acc[name] = stats.rate();
    meta["acceptance"] = acc;
  }
  std::uint64_t clamps = 0;
  for (const Trace& t : traces) clamps += t.clamps.total();
  meta["clamp_events"] = clamps;
  meta["warnings"] = report.warnings;
  atomic_write_file(dir / "metadata.json", meta.dump(2) + "\n");
}

RunMetadata read_run_metadata(const fs::path& dir) {
  const fs::path file = dir / "metadata.json";
  json meta;
  try {
    meta = json::parse(read_text_file(file));
  } catch (const json::parse_error& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  RunMetadata out;
  try {
    out.label = meta.value("label", "");
    out.seed = meta.at("seed").get<std::uint64_t>();
    out.chains = meta.at("chains").get<int>();
    out.iterations = meta.at("iterations").get<long>();
    out.burn_in = meta.at("burn_in").get<long>();
    out.thin = meta.at("thin").get<long>();
    out.data_path = meta.at("data").at("path").get<std::string>();
    out.data_checksum = checksum_parse(meta.at("data").at("checksum_fnv1a64").get<std::string>());
    out.n_obs = meta.at("data").at("n_obs").get<long>();
    out.groups = meta.at("data").at("groups").get<int>();
    out.mpsrf = meta.at("mpsrf").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                           : meta.at("mpsrf").get<double>();
    out.converged = meta.at("converged").get<bool>();
    out.wall_seconds = meta.value("wall_seconds", 0.0);
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  // formulas live in model.ini next to the metadata
  const SpecFile spec_file = parse_spec_file(read_text_file(dir / "model.ini"));
  out.location_formula = format_formula(spec_file.location);
  if (spec_file.precision) out.precision_formula = format_formula(*spec_file.precision);
  return out;
}

CriteriaReport read_run_criteria(const fs::path& dir) {
  const fs::path file = dir / "criteria.csv";
  std::ifstream in(file);
  if (!in) throw DataError("cannot open '" + file.string() + "'");
  Table t = Table::read_csv(in, file.string());
  if (t.n_rows() != 1) throw DataError(file.string() + ": expected exactly one row");
  CriteriaReport c;
  auto get = [&](const char* name) {
    const int col = t.column_index(name);
    if (col < 0) throw DataError(file.string() + ": missing column " + name);
    return t.numeric(0, col);
  };
  c.dbar = get("dbar");
  c.dhat = get("dhat");
  c.p_d = get("p_d");
  c.dic = get("dic");
  c.eaic = get("eaic");
  c.ebic = get("ebic");
  c.parameter_count = static_cast<int>(get("parameter_count"));
  c.n_obs = static_cast<long>(get("n_obs"));
  return c;
}

}  // namespace betamix
