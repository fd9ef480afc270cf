#include "mmriv/rkhs_solver.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

namespace mmriv {

namespace {

constexpr double kStationarityTol = 1e-8;
constexpr double kJitterLadder[] = {1e-10, 1e-8, 1e-6};

// Relative residual of the full normal equations
//   (L W L + lambda L) a = L W y
// used to accept a candidate solution from the reduced system.
double normal_eq_residual(const Matrix& L, const WeightMatrix& w, const Vector& y,
                          double lambda, const Vector& alpha) {
  const Vector rhs = L * (w.values * y);
  const Vector lhs = L * (w.values * (L * alpha)) + lambda * (L * alpha);
  const double scale = rhs.norm();
  return (lhs - rhs).norm() / (scale > 0.0 ? scale : 1.0);
}

// Solve (W (L + eps I) + lambda I) a = W y with one step of iterative
// refinement; returns alpha and the reciprocal condition estimate.
std::pair<Vector, double> solve_reduced(const Matrix& L, const WeightMatrix& w,
                                        const Vector& y, double lambda, double eps) {
  Matrix A = w.values * L;
  if (eps > 0.0) A += eps * w.values;
  A.diagonal().array() += lambda;
  Eigen::PartialPivLU<Matrix> lu(A);
  const Vector b = w.values * y;
  Vector alpha = lu.solve(b);
  alpha += lu.solve(b - A * alpha);
  return {std::move(alpha), lu.rcond()};
}

}  // namespace

RkhsModel fit_rkhs_with(const Matrix& L, const WeightMatrix& w, const Vector& y,
                        const Matrix& train_x, const KernelSpec& kernel_l, double lambda) {
  const Eigen::Index n = L.rows();
  require(n >= 2, "fit_rkhs: need at least two samples");
  require(lambda > 0.0, "fit_rkhs: lambda must be strictly positive");
  require(L.cols() == n && w.values.rows() == n && y.size() == n && train_x.rows() == n,
          "fit_rkhs: dimension mismatch");

  double worst_rcond = 1.0;
  auto [alpha, rcond] = solve_reduced(L, w, y, lambda, 0.0);
  worst_rcond = rcond;
  if (alpha.allFinite() && normal_eq_residual(L, w, y, lambda, alpha) < kStationarityTol) {
    return RkhsModel{std::move(alpha), train_x, kernel_l, lambda, 0.0};
  }

  // Rank-deficient L (duplicate treatments): retry against L + eps I.
  for (double eps : kJitterLadder) {
    auto [a, rc] = solve_reduced(L, w, y, lambda, eps);
    worst_rcond = std::min(worst_rcond, rc);
    Matrix Lj = L;
    Lj.diagonal().array() += eps;
    if (a.allFinite() && normal_eq_residual(Lj, w, y, lambda, a) < kStationarityTol) {
      return RkhsModel{std::move(a), train_x, kernel_l, lambda, eps};
    }
  }
  std::ostringstream os;
  os << "fit_rkhs: factorization failed after jitter escalation (rcond~" << worst_rcond
     << ")";
  throw NumericalError(os.str());
}

RkhsModel fit_rkhs(const Dataset& data, const KernelSpec& kernel_k,
                   const KernelSpec& kernel_l, double lambda) {
  data.validate();
  const GramMatrix K = gram(kernel_k, data.z, "z");
  const GramMatrix L = gram(kernel_l, data.x, "x");
  return fit_rkhs_with(L.values, weight_v(K), data.y, data.x, kernel_l, lambda);
}

Vector predict(const RkhsModel& model, const Eigen::Ref<const Matrix>& x_new) {
  require(x_new.cols() == model.train_x.cols(),
          "predict: query dimension does not match training treatments");
  return gram_cross(model.kernel_l, x_new, model.train_x) * model.alpha;
}

double rkhs_objective_with(const Matrix& L, const WeightMatrix& w, const Vector& y,
                           double lambda, const Eigen::Ref<const Vector>& alpha) {
  require(alpha.size() == L.rows() && y.size() == L.rows(),
          "rkhs_objective: dimension mismatch");
  const Vector r = y - L * alpha;
  return r.dot(w.values * r) + lambda * alpha.dot(L * alpha);
}

double rkhs_objective(const Dataset& data, const KernelSpec& kernel_k,
                      const KernelSpec& kernel_l, double lambda,
                      const Eigen::Ref<const Vector>& alpha) {
  data.validate();
  const GramMatrix K = gram(kernel_k, data.z, "z");
  const GramMatrix L = gram(kernel_l, data.x, "x");
  return rkhs_objective_with(L.values, weight_v(K), data.y, lambda, alpha);
}

RkhsModel fit_krr(const Matrix& L, const Vector& y, const Matrix& train_x,
                  const KernelSpec& kernel_l, double lambda) {
  const Eigen::Index n = L.rows();
  require(n >= 1 && y.size() == n && train_x.rows() == n, "fit_krr: dimension mismatch");
  require(lambda > 0.0, "fit_krr: lambda must be strictly positive");
  for (double eps : {0.0, 1e-10, 1e-8, 1e-6}) {
    Matrix A = L;
    A.diagonal().array() += lambda + eps;
    Eigen::LDLT<Matrix> ldlt(A);
    if (ldlt.info() != Eigen::Success) continue;
    Vector alpha = ldlt.solve(y);
    alpha += ldlt.solve(y - A * alpha);
    if (alpha.allFinite()) {
      return RkhsModel{std::move(alpha), train_x, kernel_l, lambda, eps};
    }
  }
  throw NumericalError("fit_krr: factorization failed after jitter escalation");
}

}  // namespace mmriv
