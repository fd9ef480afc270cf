#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mmriv/datagen.hpp"
#include "mmriv/risk.hpp"

namespace mmriv {

/// (train, validation, test, seed) -> test MSE against the test f_star
/// column. The harness provides method-specific fitters; diagnostics stays
/// method-agnostic.
using Fitter = std::function<double(const Dataset& train, const Dataset& validation,
                                    const Dataset& test, std::uint64_t seed)>;

struct ConsistencyRow {
  int n = 0;
  double median_mse = 0.0;
  int failures = 0;
};

/// Median test MSE per sample size over seeds; empirical check of the
/// consistency trend.
std::vector<ConsistencyRow> consistency_sweep(TrueFunction scenario, const Fitter& fit,
                                              const std::vector<int>& n_list,
                                              const std::vector<std::uint64_t>& seeds);

struct NormalityReport {
  int replications = 0;
  Vector estimates;  // sqrt(n) (theta_hat - theta*)
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double skew_threshold = 0.2;
  double kurt_threshold = 0.5;
  bool pass = false;
  int failed_replications = 0;
};

/// Monte-Carlo shape check of the limiting distribution: the linear
/// parameterization f_theta(x) = theta x on the linear low-dim scenario has
/// the closed form theta_hat = (x^T W_V y) / (x^T W_V x + lambda) with
/// lambda = 1/n, so sqrt(n) lambda -> 0. Reports standardized skewness and
/// excess kurtosis of sqrt(n)(theta_hat - 1) over R replications.
NormalityReport asymptotic_normality_check(int n, int R, std::uint64_t seed);

/// Feeds R i.i.d. standard normal draws through the same statistics;
/// validates the thresholds themselves.
NormalityReport normality_self_test(int R, std::uint64_t seed);

struct WuReport {
  double trace = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double tolerance = 0.0;
  bool trace_zero = false;
  bool mixed_signs = false;
  bool pass = false;
};

/// Checks trace(W_U) == 0 exactly and that the spectrum has both a
/// strictly negative and a strictly positive eigenvalue
/// (tol = 1e-12 |W_U|_2). Failures are reported as findings, not thrown.
WuReport wu_indefiniteness_check(const GramMatrix& K);

struct ProbeRow {
  std::string candidate;
  double v_risk = 0.0;
};

/// Empirical V-risk of each candidate structural function on a fresh draw
/// of the scenario; under identification the truth attains the smallest
/// risk at large n. Rows keep the candidate order given.
std::vector<ProbeRow> identification_probe(
    TrueFunction scenario,
    const std::vector<std::pair<std::string, std::function<double(double)>>>& candidates,
    int n, std::uint64_t seed);

}  // namespace mmriv
