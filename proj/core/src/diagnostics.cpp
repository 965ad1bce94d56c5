#include "betamix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace betamix {

namespace {

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x, double mu) {
  if (x.size() < 2) return 0.0;
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size() - 1);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, n - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

std::vector<double> batch_means(const std::vector<double>& x) {
  const size_t n = x.size();
  const size_t k = static_cast<size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  if (k < 2) return {};
  const size_t b = n / k;
  std::vector<double> means(k, 0.0);
  for (size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < b; ++j) s += x[i * b + j];
    means[i] = s / static_cast<double>(b);
  }
  return means;
}

}  // namespace

double mc_error(const std::vector<double>& draws) {
  if (draws.size() < 2) return 0.0;
  const std::vector<double> bm = batch_means(draws);
  if (bm.size() < 2) {
    const double mu = mean_of(draws);
    return std::sqrt(var_of(draws, mu) / static_cast<double>(draws.size()));
  }
  const double mu = mean_of(bm);
  return std::sqrt(var_of(bm, mu) / static_cast<double>(bm.size()));
}

double effective_sample_size(const std::vector<double>& draws) {
  const double n = static_cast<double>(draws.size());
  if (draws.size() < 2) return n;
  const double mu = mean_of(draws);
  const double s2 = var_of(draws, mu);
  const double se = mc_error(draws);
  if (s2 <= 0.0 || se <= 0.0) return n;
  const double ess = s2 / (se * se);
  return std::clamp(ess, 1e-12, n);
}

SummaryStats summarize_draws(const std::vector<double>& draws) {
  if (draws.empty()) throw std::invalid_argument("summarize_draws: empty sample");
  SummaryStats s;
  s.mean = mean_of(draws);
  s.sd = std::sqrt(var_of(draws, s.mean));
  s.mc_error = mc_error(draws);
  std::vector<double> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  s.median = quantile_sorted(sorted, 0.5);
  s.q025 = quantile_sorted(sorted, 0.025);
  s.q975 = quantile_sorted(sorted, 0.975);
  return s;
}

std::vector<double> autocorrelation(const std::vector<double>& draws, int max_lag) {
  const size_t n = draws.size();
  if (n < 2 || max_lag < 0) return {};
  const double mu = mean_of(draws);
  double denom = 0.0;
  for (double v : draws) denom += (v - mu) * (v - mu);
  std::vector<double> rho(static_cast<size_t>(max_lag) + 1, 0.0);
  rho[0] = 1.0;
  if (denom <= 0.0) return rho;
  for (int lag = 1; lag <= max_lag && static_cast<size_t>(lag) < n; ++lag) {
    double s = 0.0;
    for (size_t t = 0; t + static_cast<size_t>(lag) < n; ++t)
      s += (draws[t] - mu) * (draws[t + static_cast<size_t>(lag)] - mu);
    rho[static_cast<size_t>(lag)] = s / denom;
  }
  return rho;
}

double psrf(const std::vector<std::vector<double>>& chains) {
  const size_t m = chains.size();
  if (m < 2) throw std::invalid_argument("psrf: at least two chains required");
  size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 2) throw std::invalid_argument("psrf: chains too short");

  std::vector<double> chain_means(m);
  double w = 0.0;
  for (size_t c = 0; c < m; ++c) {
    std::vector<double> head(chains[c].begin(), chains[c].begin() + static_cast<long>(n));
    chain_means[c] = mean_of(head);
    w += var_of(head, chain_means[c]);
  }
  w /= static_cast<double>(m);
  const double grand = mean_of(chain_means);
  const double b_over_n = var_of(chain_means, grand);  // B/n
  const double nn = static_cast<double>(n);
  if (w <= 0.0) return b_over_n <= 0.0 ? std::sqrt((nn - 1.0) / nn)
                                       : std::numeric_limits<double>::infinity();
  const double vhat = (nn - 1.0) / nn * w + b_over_n;
  return std::sqrt(vhat / w);
}

double mpsrf(const std::vector<Matrix>& chains) {
  const size_t m = chains.size();
  if (m < 2) throw std::invalid_argument("mpsrf: at least two chains required");
  long n = chains.front().rows();
  const long k = chains.front().cols();
  for (const auto& c : chains) {
    n = std::min(n, c.rows());
    if (c.cols() != k) throw std::invalid_argument("mpsrf: coordinate count mismatch");
  }
  if (n < 2 || k < 1) throw std::invalid_argument("mpsrf: chains too short");

  Matrix w = Matrix::Zero(k, k);
  Matrix means(static_cast<long>(m), k);
  for (size_t c = 0; c < m; ++c) {
    const Matrix head = chains[c].topRows(n);
    const Eigen::RowVectorXd mu = head.colwise().mean();
    means.row(static_cast<long>(c)) = mu;
    Matrix centered = head.rowwise() - mu;
    w += centered.transpose() * centered / static_cast<double>(n - 1);
  }
  w /= static_cast<double>(m);
  const Eigen::RowVectorXd grand = means.colwise().mean();
  Matrix mc = means.rowwise() - grand;
  Matrix b_over_n = mc.transpose() * mc / static_cast<double>(m - 1);  // B/n

  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  if (k == 1) {
    const double wv = w(0, 0);
    const double bv = b_over_n(0, 0);
    if (wv <= 0.0)
      return bv <= 0.0 ? (nn - 1.0) / nn : std::numeric_limits<double>::infinity();
    return (nn - 1.0) / nn + (mm + 1.0) / mm * bv / wv;
  }
  // ridge keeps the whitening factor alive when a coordinate barely moves
  w += (1e-12 * std::max(1.0, w.trace() / static_cast<double>(k))) *
       Matrix::Identity(k, k);
  Eigen::LLT<Matrix> llt(w);
  if (llt.info() != Eigen::Success) {
    w = nearest_spd(w, 1e-10);
    llt.compute(w);
  }
  const Matrix l = llt.matrixL();
  Matrix a = l.triangularView<Eigen::Lower>().solve(b_over_n);
  a = l.triangularView<Eigen::Lower>().solve(Matrix(a.transpose()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  const double lambda_max = es.eigenvalues().maxCoeff();
  return (nn - 1.0) / nn + (mm + 1.0) / mm * lambda_max;
}

double geweke_z(const std::vector<double>& draws, double frac_a, double frac_b) {
  if (!(frac_a > 0.0) || !(frac_b > 0.0) || frac_a + frac_b > 1.0)
    throw std::invalid_argument("geweke_z: fractions must be positive with sum <= 1");
  const size_t n = draws.size();
  const size_t na = static_cast<size_t>(std::floor(frac_a * static_cast<double>(n)));
  const size_t nb = static_cast<size_t>(std::floor(frac_b * static_cast<double>(n)));
  if (na < 2 || nb < 2) throw std::invalid_argument("geweke_z: segments too short");
  std::vector<double> early(draws.begin(), draws.begin() + static_cast<long>(na));
  std::vector<double> late(draws.end() - static_cast<long>(nb), draws.end());
  const double se2 = mc_error(early) * mc_error(early) + mc_error(late) * mc_error(late);
  const double diff = mean_of(early) - mean_of(late);
  if (se2 <= 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0.0 ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
  }
  return diff / std::sqrt(se2);
}

namespace {
double heidel_critical(double alpha) {
  if (alpha == 0.10) return 0.3473;
  if (alpha == 0.05) return 0.4614;
  if (alpha == 0.025) return 0.5806;
  if (alpha == 0.01) return 0.7435;
  throw std::invalid_argument("heidelberger_welch: alpha must be 0.10, 0.05, 0.025 or 0.01");
}

double cramer_von_mises(const std::vector<double>& x, double sigma0_sq) {
  const size_t n = x.size();
  const double mu = mean_of(x);
  const double scale = static_cast<double>(n) * sigma0_sq;
  double s = 0.0, cum = 0.0;
  for (size_t kk = 1; kk <= n; ++kk) {
    cum += x[kk - 1];
    const double bridge = (cum - static_cast<double>(kk) * mu) / std::sqrt(scale);
    s += bridge * bridge;
  }
  return s / static_cast<double>(n);
}
}  // namespace

HeidelResult heidelberger_welch(const std::vector<double>& draws, double alpha,
                                double halfwidth_ratio) {
  const double crit = heidel_critical(alpha);
  const size_t n0 = draws.size();
  if (n0 < 20) throw std::invalid_argument("heidelberger_welch: chain too short");
  HeidelResult out;
  for (int step = 0; step <= 5; ++step) {
    const size_t drop = static_cast<size_t>(std::floor(0.1 * step * static_cast<double>(n0)));
    if (n0 - drop < 10) break;
    std::vector<double> kept(draws.begin() + static_cast<long>(drop), draws.end());
    const double se = mc_error(kept);
    const double sigma0_sq = static_cast<double>(kept.size()) * se * se;
    out.kept_fraction = static_cast<double>(kept.size()) / static_cast<double>(n0);
    out.mean = mean_of(kept);
    out.halfwidth = 1.96 * se;
    if (sigma0_sq <= 0.0) {
      out.stationary = true;  // constant sequence
      out.statistic = 0.0;
    } else {
      out.statistic = cramer_von_mises(kept, sigma0_sq);
      out.stationary = out.statistic < crit;
    }
    if (out.stationary) break;
  }
  out.halfwidth_ok = out.stationary && std::abs(out.mean) > 0.0 &&
                     out.halfwidth <= halfwidth_ratio * std::abs(out.mean);
  return out;
}

std::vector<DensityPoint> kernel_density(const std::vector<double>& draws, int points) {
  if (draws.size() < 2 || points < 2)
    throw std::invalid_argument("kernel_density: need >= 2 draws and >= 2 points");
  std::vector<double> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  const double mu = mean_of(sorted);
  const double sd = std::sqrt(var_of(sorted, mu));
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double n = static_cast<double>(sorted.size());
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  double h = 0.9 * spread * std::pow(n, -0.2);
  if (!(h > 0.0)) h = std::max(std::abs(mu), 1.0) * 1e-3;
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  std::vector<DensityPoint> grid(static_cast<size_t>(points));
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (int g = 0; g < points; ++g) {
    const double x = lo + (hi - lo) * static_cast<double>(g) / (points - 1);
    double dens = 0.0;
    for (double v : sorted) {
      const double z = (x - v) / h;
      dens += std::exp(-0.5 * z * z);
    }
    grid[static_cast<size_t>(g)] = {x, dens * norm};
  }
  return grid;
}

// ---------------------------------------------------------------------------

DiagnosticsReport diagnose(const ModelSpec& spec, int m, const std::vector<Trace>& traces,
                           double mpsrf_threshold) {
  if (traces.empty()) throw std::invalid_argument("diagnose: no traces");
  const std::vector<std::string> names = parameter_names(spec, m);
  const size_t n_chains = traces.size();
  long n = traces.front().draws.rows();
  for (const Trace& t : traces) {
    n = std::min(n, t.draws.rows());
    if (t.draws.cols() != static_cast<long>(names.size()))
      throw std::invalid_argument("diagnose: trace width does not match the model");
  }
  if (n < 20) throw std::invalid_argument("diagnose: too few retained draws");

  DiagnosticsReport report;
  report.mpsrf_threshold = mpsrf_threshold;

  for (size_t j = 0; j < names.size(); ++j) {
    ParamDiagnostics pd;
    pd.name = names[j];
    std::vector<std::vector<double>> per_chain;
    std::vector<double> pooled;
    pooled.reserve(static_cast<size_t>(n) * n_chains);
    for (const Trace& t : traces) {
      std::vector<double> col(static_cast<size_t>(n));
      for (long r = 0; r < n; ++r) col[static_cast<size_t>(r)] = t.draws(r, static_cast<long>(j));
      pooled.insert(pooled.end(), col.begin(), col.end());
      per_chain.push_back(std::move(col));
    }
    pd.stats = summarize_draws(pooled);
    pd.psrf = n_chains >= 2 ? psrf(per_chain) : std::numeric_limits<double>::quiet_NaN();
    pd.ess = 0.0;
    pd.heidel_all_stationary = true;
    pd.heidel_halfwidth_all = true;
    pd.heidel_kept_min = 1.0;
    for (const auto& col : per_chain) {
      pd.ess += effective_sample_size(col);
      pd.geweke_worst = std::max(pd.geweke_worst, std::abs(geweke_z(col)));
      const HeidelResult h = heidelberger_welch(col);
      pd.heidel_all_stationary = pd.heidel_all_stationary && h.stationary;
      pd.heidel_halfwidth_all = pd.heidel_halfwidth_all && h.halfwidth_ok;
      pd.heidel_kept_min = std::min(pd.heidel_kept_min, h.kept_fraction);
    }
    report.params.push_back(std::move(pd));
  }

  {
    std::vector<double> pooled_dev;
    for (const Trace& t : traces)
      pooled_dev.insert(pooled_dev.end(), t.deviance.begin(),
                        t.deviance.begin() + static_cast<long>(n));
    report.deviance = summarize_draws(pooled_dev);
  }

  if (n_chains >= 2) {
    std::vector<Matrix> coords;
    for (const Trace& t : traces) {
      const Vector probe = mpsrf_coordinates(
          spec, unflatten_state(spec, m, Vector(t.draws.row(0).transpose())));
      Matrix c(n, probe.size());
      for (long r = 0; r < n; ++r)
        c.row(r) = mpsrf_coordinates(
                       spec, unflatten_state(spec, m, Vector(t.draws.row(r).transpose())))
                       .transpose();
      coords.push_back(std::move(c));
    }
    report.mpsrf = mpsrf(coords);
    report.converged = report.mpsrf < mpsrf_threshold;
  } else {
    report.mpsrf = std::numeric_limits<double>::quiet_NaN();
    report.converged = false;
    report.warnings.push_back("single chain: shrink factors unavailable");
  }

  std::uint64_t clamp_total = 0;
  for (const Trace& t : traces) {
    if (!t.warning.empty()) report.warnings.push_back(t.warning);
    clamp_total += t.clamps.total();
  }
  if (clamp_total > 0)
    report.warnings.push_back("likelihood clamped extreme fitted values " +
                              std::to_string(clamp_total) + " times");
  return report;
}

}  // namespace betamix
