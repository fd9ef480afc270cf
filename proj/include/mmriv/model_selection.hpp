#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mmriv/nystrom.hpp"

namespace mmriv {

/// Gaussian-process reading of the V-statistic objective: prior
/// f(x) ~ GP(0, delta L), likelihood N(f(x) | y, K_z^{-1}), posterior
/// N(c, C) with C = (K_z + (delta L)^{-1})^{-1} and c = C K_z y.
/// With delta = (lambda n^2)^{-1} the posterior mean equals L alpha_hat of
/// the closed-form estimator.
struct GpPosterior {
  Vector c;
  Matrix C;
  double delta = 0.0;
  bool exact = true;
};

/// Exact posterior through the stabilized form C = delta L (delta K_z L + I)^{-1}
/// (no inversion of L), symmetrized after the solve.
GpPosterior gp_posterior(const GramMatrix& K_z, const GramMatrix& L, const Vector& y,
                         double delta);

/// Low-rank posterior with K_z ~= n^2 U~ diag(V~) U~^T:
///   C = delta [L - L U~ (n^2 delta U~^T L U~ + diag(V~)^{-1})^{-1} U~^T (n^2 delta) L].
GpPosterior gp_posterior_nystrom(const NystromFactors& factors, const GramMatrix& L,
                                 const Vector& y, double delta);

/// Leave-M-out plan: disjoint folds of equal size M. The default plan is a
/// seeded random partition into floor(n/M) folds; leftover points (M not
/// dividing n) stay out of every fold.
struct CvPlan {
  int M = 1;
  std::vector<std::vector<int>> folds;
};

CvPlan make_cv_plan(int n, int M, std::uint64_t seed);

/// Instrument-clustered plan: k-d style recursive median splits of the
/// instrument rows down to cells of M points, so each fold holds mutually
/// close instruments. With far-apart fold members the off-diagonal kernel
/// weights vanish and the fold error degenerates into a plain prediction
/// error, which under confounding rewards over-regularized fits; clustered
/// folds keep r^T K_de r a measurement of the local conditional-moment
/// violation. Deterministic. Used by the benchmark protocol with M = 10.
CvPlan make_clustered_cv_plan(const Eigen::Ref<const Matrix>& z, int M);

/// Analytical leave-M-out CV error: sum over folds of r^T K_de r with
/// r = (I - C_de K_de)^{-1} (c_de - y_de), all blocks read from the
/// full-data posterior. No refitting.
double lmocv_error(const GpPosterior& posterior, const GramMatrix& K_z, const Vector& y,
                   const CvPlan& plan);

struct CvEntry {
  double delta = 0.0;
  double l_param = 0.0;
  double cv_error = 0.0;
  std::string status;  // "ok" or the failure message
};

struct SelectionResult {
  double best_delta = 0.0;
  double best_l_param = 0.0;
  KernelSpec best_l;
  std::vector<CvEntry> table;
};

/// Grid search over (delta, l-parameter) minimizing the analytical LMOCV
/// error; ties break toward larger delta (stronger regularization). With
/// `factors` present the posterior blocks come from the low-rank formula
/// and the same factors are reused across the whole grid; the covariance
/// is never materialized.
SelectionResult select_hyperparams(const GramMatrix& K_z, const Matrix& x, const Vector& y,
                                   const std::function<KernelSpec(double)>& l_family,
                                   const std::vector<double>& delta_grid,
                                   const std::vector<double>& l_param_grid,
                                   const CvPlan& plan,
                                   const NystromFactors* factors = nullptr);

/// Convenience overload building the instrument Gram (and factors when
/// nystrom_m > 0) from the dataset.
SelectionResult select_hyperparams(const Dataset& data, const KernelSpec& kernel_k,
                                   const std::function<KernelSpec(double)>& l_family,
                                   const std::vector<double>& delta_grid,
                                   const std::vector<double>& l_param_grid,
                                   const CvPlan& plan, int nystrom_m = 0,
                                   std::uint64_t nystrom_seed = 0);

/// Default grids: delta = (lambda n^2)^{-1} over the solver's lambda grid
/// {1e-8, ..., 1e-1}; l-parameter = median heuristic on x times
/// {0.25, 0.5, 1, 2, 4}.
std::vector<double> default_lambda_grid();
std::vector<double> default_delta_grid(int n);
std::vector<double> default_sigma_l_grid(const Eigen::Ref<const Matrix>& x);

}  // namespace mmriv
