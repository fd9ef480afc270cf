#pragma once

#include <vector>

#include "mmriv/rkhs_solver.hpp"

namespace mmriv {

/// Low-rank factorization W_V ~= U~ diag(V~) U~^T built from a uniformly
/// sampled landmark subset: with W_mm = U diag(V) U^T the eigendecomposition
/// of the subset block, U~ = sqrt(m/n) W_nm U V^{-1} and V~ = (n/m) V.
/// Eigenvalues at or below 1e-12 x max are dropped (V^{-1} would explode).
struct NystromFactors {
  Matrix u_tilde;           // n x r
  Vector v_tilde;           // r, strictly positive
  std::vector<int> subset;  // m sorted landmark indices
  int dropped_eigs = 0;

  int rank() const { return static_cast<int>(v_tilde.size()); }
  /// Dense reconstruction U~ diag(V~) U~^T (tests and small n only).
  Matrix reconstruct() const;
  /// y -> (U~ diag(V~) U~^T) y without forming the n x n matrix.
  Vector apply(const Eigen::Ref<const Vector>& y) const;
};

NystromFactors nystrom_factors(const GramMatrix& K, int m, std::uint64_t seed);

/// Woodbury solve of the regularized V-statistic objective with W_V
/// replaced by the Nystrom factors:
///   alpha = (1/lambda) [I - U~ (U~^T L U~ / lambda + diag(V~)^{-1})^{-1}
///                         U~^T L / lambda] U~ diag(V~) U~^T y.
/// Exact at full rank; no n x n factorization anywhere.
RkhsModel fit_nystrom(const Dataset& data, const KernelSpec& kernel_k,
                      const KernelSpec& kernel_l, double lambda, int m, std::uint64_t seed);

RkhsModel fit_nystrom_with(const NystromFactors& factors, const Matrix& L, const Vector& y,
                           const Matrix& train_x, const KernelSpec& kernel_l, double lambda);

}  // namespace mmriv
