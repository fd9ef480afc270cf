#include "mmriv/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace mmriv {

namespace {

double median_of(std::vector<double> v) {
  const size_t c = v.size();
  const size_t hi = c / 2;
  std::nth_element(v.begin(), v.begin() + hi, v.end());
  double med = v[hi];
  if (c % 2 == 0) {
    med = 0.5 * (med + *std::max_element(v.begin(), v.begin() + hi));
  }
  return med;
}

NormalityReport shape_report(Vector estimates, int failed) {
  NormalityReport rep;
  rep.replications = static_cast<int>(estimates.size());
  rep.failed_replications = failed;
  require(rep.replications >= 30, "normality check: need at least 30 replications");
  const double mean = estimates.mean();
  const Eigen::ArrayXd centered = estimates.array() - mean;
  const double m2 = centered.square().mean();
  const double m3 = centered.cube().mean();
  const double m4 = centered.square().square().mean();
  rep.estimates = std::move(estimates);
  rep.mean = mean;
  rep.variance = m2 * rep.replications / std::max(1, rep.replications - 1);
  rep.skewness = m3 / std::pow(m2, 1.5);
  rep.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  rep.pass = std::abs(rep.skewness) < rep.skew_threshold &&
             std::abs(rep.excess_kurtosis) < rep.kurt_threshold;
  return rep;
}

}  // namespace

std::vector<ConsistencyRow> consistency_sweep(TrueFunction scenario, const Fitter& fit,
                                              const std::vector<int>& n_list,
                                              const std::vector<std::uint64_t>& seeds) {
  require(!n_list.empty() && !seeds.empty(), "consistency_sweep: empty n list or seeds");
  for (size_t i = 1; i < n_list.size(); ++i) {
    require(n_list[i] > n_list[i - 1], "consistency_sweep: n_list must be increasing");
  }
  std::vector<ConsistencyRow> rows;
  for (int n : n_list) {
    std::vector<double> mses;
    int failures = 0;
    for (std::uint64_t seed : seeds) {
      const Dataset train = gen_low_dim({scenario, n, substream(seed, 0)});
      const Dataset validation = gen_low_dim({scenario, n, substream(seed, 1)});
      const Dataset test = gen_low_dim({scenario, n, substream(seed, 2)});
      try {
        mses.push_back(fit(train, validation, test, seed));
      } catch (const NumericalError&) {
        ++failures;
      }
    }
    if (mses.empty()) {
      throw NumericalError("consistency_sweep: every seed failed at n=" + std::to_string(n));
    }
    rows.push_back({n, median_of(std::move(mses)), failures});
  }
  return rows;
}

NormalityReport asymptotic_normality_check(int n, int R, std::uint64_t seed) {
  require(n >= 2, "asymptotic_normality_check: n must be at least 2");
  require(R >= 30, "asymptotic_normality_check: need at least 30 replications");
  std::vector<double> vals;
  vals.reserve(R);
  int failed = 0;
  const double lambda = 1.0 / n;
  for (int r = 0; r < R; ++r) {
    try {
      const Dataset data =
          gen_low_dim({TrueFunction::Linear, n, substream(seed, static_cast<std::uint64_t>(r))});
      const KernelSpec k = sum_gaussians_from_median(data.z);
      const WeightMatrix w = weight_v(gram(k, data.z, "z"));
      const Vector x = data.x.col(0);
      const Vector wy = w.values * data.y;
      const Vector wx = w.values * x;
      const double theta = x.dot(wy) / (x.dot(wx) + lambda);
      vals.push_back(std::sqrt(static_cast<double>(n)) * (theta - 1.0));
    } catch (const std::exception&) {
      ++failed;
    }
  }
  Vector estimates = Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return shape_report(std::move(estimates), failed);
}

NormalityReport normality_self_test(int R, std::uint64_t seed) {
  require(R >= 30, "normality_self_test: need at least 30 replications");
  Rng rng(seed);
  Vector draws(R);
  for (int i = 0; i < R; ++i) draws[i] = rng.normal();
  return shape_report(std::move(draws), 0);
}

WuReport wu_indefiniteness_check(const GramMatrix& K) {
  const WeightMatrix wu = weight_u(K);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(wu.values);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("wu_indefiniteness_check: eigendecomposition failed");
  }
  WuReport rep;
  rep.trace = wu.values.trace();
  rep.min_eigenvalue = eig.eigenvalues().minCoeff();
  rep.max_eigenvalue = eig.eigenvalues().maxCoeff();
  const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  rep.tolerance = 1e-12 * norm;
  rep.trace_zero = rep.trace == 0.0;
  rep.mixed_signs =
      rep.min_eigenvalue < -rep.tolerance && rep.max_eigenvalue > rep.tolerance;
  rep.pass = rep.trace_zero && rep.mixed_signs;
  return rep;
}

std::vector<ProbeRow> identification_probe(
    TrueFunction scenario,
    const std::vector<std::pair<std::string, std::function<double(double)>>>& candidates,
    int n, std::uint64_t seed) {
  require(!candidates.empty(), "identification_probe: need at least one candidate");
  const Dataset data = gen_low_dim({scenario, n, seed});
  Matrix residuals(n, static_cast<Eigen::Index>(candidates.size()));
  for (size_t c = 0; c < candidates.size(); ++c) {
    for (int i = 0; i < n; ++i) {
      residuals(i, static_cast<Eigen::Index>(c)) = data.y[i] - candidates[c].second(data.x(i, 0));
    }
  }
  const KernelSpec k = sum_gaussians_from_median(data.z);
  const Vector risks = v_risk_blocked(residuals, k, data.z);
  std::vector<ProbeRow> rows;
  for (size_t c = 0; c < candidates.size(); ++c) {
    rows.push_back({candidates[c].first, risks[static_cast<Eigen::Index>(c)]});
  }
  return rows;
}

}  // namespace mmriv
