#include "mmriv/nystrom.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "mmriv/rng.hpp"

namespace mmriv {

Matrix NystromFactors::reconstruct() const {
  return u_tilde * v_tilde.asDiagonal() * u_tilde.transpose();
}

Vector NystromFactors::apply(const Eigen::Ref<const Vector>& y) const {
  return u_tilde * (v_tilde.asDiagonal() * (u_tilde.transpose() * y));
}

NystromFactors nystrom_factors(const GramMatrix& K, int m, std::uint64_t seed) {
  const int n = K.n();
  require(m >= 1 && m <= n, "nystrom_factors: need 1 <= m <= n");

  Rng rng(seed);
  std::vector<int> subset = rng.sample_without_replacement(n, m);

  const Matrix w_v = K.values / (static_cast<double>(n) * n);
  Matrix w_mm(m, m);
  Matrix w_nm(n, m);
  for (int j = 0; j < m; ++j) {
    w_nm.col(j) = w_v.col(subset[j]);
    for (int i = 0; i < m; ++i) w_mm(i, j) = w_v(subset[i], subset[j]);
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(w_mm);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("nystrom_factors: eigendecomposition of the subset block failed");
  }
  const Vector evals = eig.eigenvalues();
  const double floor = 1e-12 * evals.maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < m; ++i) {
    if (evals[i] > floor && evals[i] > 0.0) keep.push_back(i);
  }
  if (keep.empty()) {
    throw NumericalError("nystrom_factors: degenerate subset, all eigenvalues below floor");
  }

  const int r = static_cast<int>(keep.size());
  Matrix u_keep(m, r);
  Vector v_keep(r);
  for (int i = 0; i < r; ++i) {
    u_keep.col(i) = eig.eigenvectors().col(keep[i]);
    v_keep[i] = evals[keep[i]];
  }

  NystromFactors f;
  f.u_tilde = std::sqrt(static_cast<double>(m) / n) * w_nm * u_keep *
              v_keep.cwiseInverse().asDiagonal();
  f.v_tilde = (static_cast<double>(n) / m) * v_keep;
  f.subset = std::move(subset);
  f.dropped_eigs = m - r;
  return f;
}

RkhsModel fit_nystrom_with(const NystromFactors& factors, const Matrix& L, const Vector& y,
                           const Matrix& train_x, const KernelSpec& kernel_l,
                           double lambda) {
  const Eigen::Index n = L.rows();
  require(lambda > 0.0, "fit_nystrom: lambda must be strictly positive");
  require(factors.u_tilde.rows() == n && y.size() == n && train_x.rows() == n,
          "fit_nystrom: dimension mismatch");

  const Matrix& u = factors.u_tilde;
  const Vector w = factors.apply(y);          // U~ V~ U~^T y
  const Matrix lu_prod = L * u;               // n x r
  const Matrix ulu = u.transpose() * lu_prod; // r x r

  Matrix S = ulu / lambda;
  S += factors.v_tilde.cwiseInverse().asDiagonal();
  const Vector rhs = u.transpose() * (L * w);

  const double diag_scale = S.diagonal().cwiseAbs().mean();
  for (double eps : {0.0, 1e-12, 1e-10, 1e-8}) {
    Matrix Sj = S;
    Sj.diagonal().array() += eps * diag_scale;
    Eigen::LDLT<Matrix> ldlt(Sj);
    if (ldlt.info() != Eigen::Success) continue;
    Vector alpha = (w - u * ldlt.solve(rhs) / lambda) / lambda;
    if (alpha.allFinite()) {
      return RkhsModel{std::move(alpha), train_x, kernel_l, lambda, 0.0};
    }
  }
  throw NumericalError("fit_nystrom: inner system singular after jitter escalation");
}

RkhsModel fit_nystrom(const Dataset& data, const KernelSpec& kernel_k,
                      const KernelSpec& kernel_l, double lambda, int m, std::uint64_t seed) {
  data.validate();
  require(data.n() >= 2, "fit_nystrom: need at least two samples");
  const GramMatrix K = gram(kernel_k, data.z, "z");
  const GramMatrix L = gram(kernel_l, data.x, "x");
  const NystromFactors factors = nystrom_factors(K, m, seed);
  return fit_nystrom_with(factors, L.values, data.y, data.x, kernel_l, lambda);
}

}  // namespace mmriv
