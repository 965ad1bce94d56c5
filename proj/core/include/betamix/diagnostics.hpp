#pragma once

#include <string>
#include <vector>

#include "betamix/sampler.hpp"

namespace betamix {

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double mc_error = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

SummaryStats summarize_draws(const std::vector<double>& draws);

// Monte Carlo standard error of the mean by non-overlapping batch means with
// batch count floor(sqrt(n)).
double mc_error(const std::vector<double>& draws);

// n * var / spectral-density-at-zero, clamped to (0, n]
double effective_sample_size(const std::vector<double>& draws);

std::vector<double> autocorrelation(const std::vector<double>& draws, int max_lag);

// Potential scale reduction factor over two or more chains of equal length,
// sqrt(((n-1)/n W + B/n) / W); identical chains give sqrt((n-1)/n).
double psrf(const std::vector<std::vector<double>>& chains);

// Multivariate shrink factor (n-1)/n + (M+1)/M * lambda_max(W^{-1} B/n); each
// chain is a draws x coords matrix.  One coordinate reduces to
// (n-1)/n + (M+1)/M * B/(n W).
double mpsrf(const std::vector<Matrix>& chains);

// Standardised difference between the means of an early and a late segment,
// using batch-means standard errors; |z| > 2 flags drift.
double geweke_z(const std::vector<double>& draws, double frac_a = 0.1,
                double frac_b = 0.5);

struct HeidelResult {
  bool stationary = false;
  double kept_fraction = 0.0;   // of the original length, after discards
  double statistic = 0.0;       // Cramer-von Mises value on the kept part
  double mean = 0.0;
  double halfwidth = 0.0;       // 1.96 * mc error of the kept part
  bool halfwidth_ok = false;    // halfwidth <= ratio * |mean|
};

// Stationarity test on the Brownian bridge of cumulative sums, dropping 10%
// prefixes until it passes or half the chain is gone.  alpha must be one of
// 0.10, 0.05, 0.025, 0.01.
HeidelResult heidelberger_welch(const std::vector<double>& draws, double alpha = 0.05,
                                double halfwidth_ratio = 0.1);

// Gaussian kernel density on an even grid, Silverman bandwidth.
struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};
std::vector<DensityPoint> kernel_density(const std::vector<double>& draws, int points);

// -----------------------------------------------------------------------
// Assembly over an ensemble of traces.

struct ParamDiagnostics {
  std::string name;
  SummaryStats stats;        // chains pooled
  double psrf = 1.0;
  double ess = 0.0;          // summed over chains
  double geweke_worst = 0.0; // largest |z| across chains
  bool heidel_all_stationary = false;
  double heidel_kept_min = 0.0;
  bool heidel_halfwidth_all = false;
};

struct DiagnosticsReport {
  std::vector<ParamDiagnostics> params;
  double mpsrf = 1.0;
  double mpsrf_threshold = 1.2;
  bool converged = false;  // mpsrf < threshold
  SummaryStats deviance;
  std::vector<std::string> warnings;
};

DiagnosticsReport diagnose(const ModelSpec& spec, int m, const std::vector<Trace>& traces,
                           double mpsrf_threshold = 1.2);

}  // namespace betamix
