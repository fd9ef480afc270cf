#pragma once

#include "mmriv/dataset.hpp"
#include "mmriv/kernels.hpp"
#include "mmriv/risk.hpp"

namespace mmriv {

/// Fitted kernel machine f(x) = sum_i alpha_i l(x, x_i) over the training
/// treatments.
struct RkhsModel {
  Vector alpha;
  Matrix train_x;
  KernelSpec kernel_l;
  double lambda = 0.0;
  double jitter_used = 0.0;
};

/// Closed-form minimizer of
///   (y - L a)^T W_V (y - L a) + lambda a^T L a
/// obtained from the reduced system (W_V L + lambda I) a = W_V y; falls
/// back to the full normal equations with escalating jitter on L when the
/// reduced solve leaves a large stationarity residual (rank-deficient L).
RkhsModel fit_rkhs(const Dataset& data, const KernelSpec& kernel_k,
                   const KernelSpec& kernel_l, double lambda);

/// Same solve with precomputed Gram/weight pieces (selection and benchmark
/// loops reuse them across many calls).
RkhsModel fit_rkhs_with(const Matrix& L, const WeightMatrix& w, const Vector& y,
                        const Matrix& train_x, const KernelSpec& kernel_l, double lambda);

Vector predict(const RkhsModel& model, const Eigen::Ref<const Matrix>& x_new);

/// Exact objective value at a given coefficient vector.
double rkhs_objective(const Dataset& data, const KernelSpec& kernel_k,
                      const KernelSpec& kernel_l, double lambda,
                      const Eigen::Ref<const Vector>& alpha);

double rkhs_objective_with(const Matrix& L, const WeightMatrix& w, const Vector& y,
                           double lambda, const Eigen::Ref<const Vector>& alpha);

/// Kernel ridge regression of y on x alone: minimizes |y - L a|^2 +
/// lambda a^T L a via (L + lambda I) a = y with the same jitter fallback.
/// This is the fit above with the weight matrix replaced by the identity.
RkhsModel fit_krr(const Matrix& L, const Vector& y, const Matrix& train_x,
                  const KernelSpec& kernel_l, double lambda);

}  // namespace mmriv
