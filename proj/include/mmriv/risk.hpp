#pragma once

#include <functional>

#include "mmriv/dataset.hpp"
#include "mmriv/kernels.hpp"
#include "mmriv/rng.hpp"

namespace mmriv {

/// Quadratic-form weight matrix of the empirical moment-restriction risk.
/// V variant: K_z / n^2 (positive semi-definite). U variant: off-diagonal
/// K_z / (n(n-1)) with an exactly zero diagonal, hence trace 0 and an
/// indefinite spectrum.
struct WeightMatrix {
  enum class Variant { V, U };
  Matrix values;
  Variant variant;
  int n() const { return static_cast<int>(values.rows()); }
};

WeightMatrix weight_v(const GramMatrix& K);
WeightMatrix weight_u(const GramMatrix& K);

/// r^T W r. Nonnegative for the V variant.
double empirical_risk(const Eigen::Ref<const Vector>& residuals, const WeightMatrix& w);

/// V-statistic risks of several residual vectors (columns) against one
/// instrument set, accumulated in row blocks so the n x n Gram is never
/// materialized. Used by large-n diagnostics.
Vector v_risk_blocked(const Eigen::Ref<const Matrix>& residual_cols, const KernelSpec& k,
                      const Eigen::Ref<const Matrix>& z, int block = 512);

/// One draw from a structural equation model: (x, y, z) with scalar
/// treatment and outcome.
struct SemSample {
  double x;
  double y;
  Vector z;
};

/// Monte-Carlo estimate of the population risk
/// E[(Y - f(X)) (Y' - f(X')) k(Z, Z')] over `reps` independent pairs.
/// Diagnostic only; never used in fitting.
double population_risk_mc(const std::function<double(double)>& f,
                          const std::function<SemSample(Rng&)>& draw, const KernelSpec& k,
                          int reps, std::uint64_t seed);

}  // namespace mmriv
