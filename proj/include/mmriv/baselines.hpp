#pragma once

#include <vector>

#include "mmriv/rkhs_solver.hpp"

namespace mmriv {

/// Two-stage least squares fit: slopes for each treatment column followed
/// by the intercept. first_stage_f is the classic first-stage F statistic
/// (minimum over treatment columns); weak_instrument flags F < 10.
struct LinearModel {
  Vector coefficients;
  double first_stage_f = 0.0;
  bool weak_instrument = false;
};

LinearModel fit_2sls(const Dataset& data);
Vector predict(const LinearModel& model, const Eigen::Ref<const Matrix>& x);

/// Polynomial 2SLS with ridge on both stages; a shared polynomial degree
/// and ridge strength are chosen by k-fold CV on the stage-2 prediction
/// error. Features are per-column powers (no cross terms) standardized
/// before fitting.
struct PolyRidgeModel {
  int degree = 1;
  double ridge = 0.0;
  // Stage 1: instrument polynomial -> each treatment column.
  Matrix stage1_coef;     // (z-features) x d
  Vector stage1_intercept;
  Vector stage1_mean, stage1_scale;  // z-feature standardization
  // Stage 2: treatment polynomial -> outcome.
  Vector stage2_coef;
  double stage2_intercept = 0.0;
  Vector stage2_mean, stage2_scale;
};

PolyRidgeModel fit_poly2sls(const Dataset& data, int max_degree,
                            const std::vector<double>& ridge_grid, int cv_folds,
                            std::uint64_t seed);
Vector predict(const PolyRidgeModel& model, const Eigen::Ref<const Matrix>& x);

/// Kernel ridge regression of Y on X that ignores the instruments; the
/// nonlinear no-IV reference ("DirectKRR"). lambda by k-fold CV.
RkhsModel fit_direct_ridge(const Dataset& data, const KernelSpec& kernel_l,
                           const std::vector<double>& lambda_grid, int cv_folds,
                           std::uint64_t seed);

/// Per-column polynomial feature map [v, v^2, ..., v^degree] per input
/// column (shared by fit and predict paths; exposed for tests).
Matrix polynomial_features(const Eigen::Ref<const Matrix>& v, int degree);

}  // namespace mmriv
