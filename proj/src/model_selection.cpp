#include "mmriv/model_selection.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <sstream>

#include "mmriv/rng.hpp"

namespace mmriv {

namespace {

void check_posterior_inputs(Eigen::Index n, const Vector& y, double delta) {
  require(delta > 0.0, "gp_posterior: delta must be strictly positive");
  require(y.size() == n, "gp_posterior: y length does not match Gram size");
}

Matrix symmetrized(Matrix m) {
  m = 0.5 * (m + m.transpose()).eval();
  return m;
}

}  // namespace

GpPosterior gp_posterior(const GramMatrix& K_z, const GramMatrix& L, const Vector& y,
                         double delta) {
  const Eigen::Index n = K_z.values.rows();
  require(L.values.rows() == n, "gp_posterior: K_z and L sizes differ");
  check_posterior_inputs(n, y, delta);

  // C = delta L (delta K L + I)^{-1}; the right inverse is applied through
  // the transposed factorization.
  Matrix M = delta * (K_z.values * L.values);
  M.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Matrix> lu(M.transpose());
  Matrix C = delta * lu.solve(L.values).transpose();
  if (!C.allFinite()) {
    throw NumericalError("gp_posterior: factorization produced non-finite covariance");
  }
  GpPosterior post;
  post.C = symmetrized(std::move(C));
  post.c = post.C * (K_z.values * y);
  post.delta = delta;
  post.exact = true;
  return post;
}

GpPosterior gp_posterior_nystrom(const NystromFactors& factors, const GramMatrix& L,
                                 const Vector& y, double delta) {
  const Eigen::Index n = L.values.rows();
  require(factors.u_tilde.rows() == n, "gp_posterior_nystrom: factor size does not match L");
  check_posterior_inputs(n, y, delta);
  const double n2d = static_cast<double>(n) * static_cast<double>(n) * delta;

  const Matrix& u = factors.u_tilde;
  const Matrix G = L.values * u;  // n x r
  Matrix S = n2d * (u.transpose() * G);
  S += factors.v_tilde.cwiseInverse().asDiagonal();

  const double diag_scale = S.diagonal().cwiseAbs().mean();
  for (double eps : {0.0, 1e-12, 1e-10, 1e-8}) {
    Matrix Sj = S;
    Sj.diagonal().array() += eps * diag_scale;
    Eigen::LDLT<Matrix> ldlt(Sj);
    if (ldlt.info() != Eigen::Success) continue;
    Matrix C = delta * (L.values - n2d * (G * ldlt.solve(G.transpose())));
    if (!C.allFinite()) continue;
    GpPosterior post;
    post.C = symmetrized(std::move(C));
    post.c = post.C * (static_cast<double>(n) * static_cast<double>(n) * factors.apply(y));
    post.delta = delta;
    post.exact = false;
    return post;
  }
  throw NumericalError("gp_posterior_nystrom: inner system singular after jitter");
}

CvPlan make_cv_plan(int n, int M, std::uint64_t seed) {
  require(M >= 1 && M <= n, "make_cv_plan: need 1 <= M <= n");
  Rng rng(seed);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = 0; i < n - 1; ++i) {
    int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(perm[i], perm[j]);
  }
  CvPlan plan;
  plan.M = M;
  const int folds = n / M;
  plan.folds.reserve(folds);
  for (int f = 0; f < folds; ++f) {
    plan.folds.emplace_back(perm.begin() + static_cast<long>(f) * M,
                            perm.begin() + static_cast<long>(f + 1) * M);
  }
  return plan;
}

namespace {

// Recursive coordinate-median split of idx[lo, hi); the left part size is
// kept a multiple of M so only one global tail remainder is ever dropped.
void kd_split(const Eigen::Ref<const Matrix>& z, std::vector<int>& idx, long lo, long hi,
              int M, std::vector<std::vector<int>>& folds) {
  const long count = hi - lo;
  if (count < 2 * M) {
    for (long p = lo; p + M <= hi; p += M) {
      folds.emplace_back(idx.begin() + p, idx.begin() + p + M);
    }
    return;
  }
  int coord = 0;
  double best_spread = -1.0;
  for (int c = 0; c < z.cols(); ++c) {
    double mn = z(idx[lo], c), mx = mn;
    for (long i = lo; i < hi; ++i) {
      mn = std::min(mn, z(idx[i], c));
      mx = std::max(mx, z(idx[i], c));
    }
    if (mx - mn > best_spread) {
      best_spread = mx - mn;
      coord = c;
    }
  }
  const long mid = lo + ((count / 2) / M) * M;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                   [&](int a, int b) { return z(a, coord) < z(b, coord); });
  kd_split(z, idx, lo, mid, M, folds);
  kd_split(z, idx, mid, hi, M, folds);
}

}  // namespace

CvPlan make_clustered_cv_plan(const Eigen::Ref<const Matrix>& z, int M) {
  const int n = static_cast<int>(z.rows());
  require(M >= 1 && M <= n, "make_clustered_cv_plan: need 1 <= M <= n");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  CvPlan plan;
  plan.M = M;
  kd_split(z, idx, 0, n, M, plan.folds);
  return plan;
}

namespace {

// Shared fold residual: r = (I - C_de K_de)^{-1} (c_de - y_de), returning
// r^T K_de r. C_de/c_de come from the caller as the fold blocks.
double fold_error(const Matrix& c_de_cov, const Vector& c_de, const Matrix& k_de,
                  const Vector& y_de, int fold_index) {
  const Eigen::Index m = k_de.rows();
  Matrix A = Matrix::Identity(m, m) - c_de_cov * k_de;
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "lmocv_error: (I - C_de K_de) singular at fold " << fold_index;
    throw NumericalError(os.str());
  }
  const Vector r = lu.solve(c_de - y_de);
  return r.dot(k_de * r);
}

template <typename BlockFn>
double lmocv_sum(const std::vector<std::vector<int>>& folds, const GramMatrix& K_z,
                 const Vector& y, BlockFn&& blocks) {
  double total = 0.0;
  const int n = static_cast<int>(y.size());
  for (size_t f = 0; f < folds.size(); ++f) {
    const auto& idx = folds[f];
    const int m = static_cast<int>(idx.size());
    require(m >= 1, "lmocv_error: empty fold");
    Matrix k_de(m, m);
    Vector y_de(m);
    for (int i = 0; i < m; ++i) {
      require(idx[i] >= 0 && idx[i] < n, "lmocv_error: fold index out of range");
      y_de[i] = y[idx[i]];
      for (int j = 0; j < m; ++j) k_de(i, j) = K_z.values(idx[i], idx[j]);
    }
    auto [c_cov, c_mean] = blocks(idx);
    total += fold_error(c_cov, c_mean, k_de, y_de, static_cast<int>(f));
  }
  return total;
}

}  // namespace

double lmocv_error(const GpPosterior& posterior, const GramMatrix& K_z, const Vector& y,
                   const CvPlan& plan) {
  require(posterior.C.rows() == y.size() && K_z.values.rows() == y.size(),
          "lmocv_error: dimension mismatch");
  return lmocv_sum(plan.folds, K_z, y, [&](const std::vector<int>& idx) {
    const int m = static_cast<int>(idx.size());
    Matrix c_cov(m, m);
    Vector c_mean(m);
    for (int i = 0; i < m; ++i) {
      c_mean[i] = posterior.c[idx[i]];
      for (int j = 0; j < m; ++j) c_cov(i, j) = posterior.C(idx[i], idx[j]);
    }
    return std::make_pair(std::move(c_cov), std::move(c_mean));
  });
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Low-rank grid pass: for fixed L the posterior pieces depend on delta only
// through scalars and one r x r solve, so the n x n covariance is never
// formed. Blocks: C_de = delta L_de - n^2 delta^2 G_de T G_de^T with
// G = L U~ and T = S^{-1}.
void run_nystrom_grid(const GramMatrix& K_z, const Matrix& L, const Vector& y,
                      const NystromFactors& factors, const std::vector<double>& delta_grid,
                      double l_param, const CvPlan& plan, std::vector<CvEntry>& table) {
  const Eigen::Index n = L.rows();
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  const Matrix& u = factors.u_tilde;
  const Matrix G = L * u;
  const Matrix m0 = u.transpose() * G;
  const Vector v0 = n2 * factors.apply(y);  // K~ y
  const Vector lv0 = L * v0;
  const Vector gt_v0 = G.transpose() * v0;

  for (double delta : delta_grid) {
    CvEntry entry{delta, l_param, kInf, "ok"};
    try {
      require(delta > 0.0, "select_hyperparams: delta must be strictly positive");
      const double n2d = n2 * delta;
      Matrix S = n2d * m0;
      S += factors.v_tilde.cwiseInverse().asDiagonal();
      Eigen::LDLT<Matrix> ldlt(S);
      if (ldlt.info() != Eigen::Success) {
        throw NumericalError("select_hyperparams: inner system factorization failed");
      }
      const Matrix W = ldlt.solve(G.transpose());  // r x n
      const Vector c = delta * lv0 - (n2d * delta) * (G * ldlt.solve(gt_v0));
      if (!c.allFinite()) {
        throw NumericalError("select_hyperparams: non-finite posterior mean");
      }
      entry.cv_error = lmocv_sum(plan.folds, K_z, y, [&](const std::vector<int>& idx) {
        const int m = static_cast<int>(idx.size());
        Matrix g_de(m, G.cols());
        Matrix w_de(G.cols(), m);
        Matrix l_de(m, m);
        Vector c_mean(m);
        for (int i = 0; i < m; ++i) {
          g_de.row(i) = G.row(idx[i]);
          w_de.col(i) = W.col(idx[i]);
          c_mean[i] = c[idx[i]];
          for (int j = 0; j < m; ++j) l_de(i, j) = L(idx[i], idx[j]);
        }
        Matrix c_cov = delta * l_de - (n2d * delta) * (g_de * w_de);
        return std::make_pair(std::move(c_cov), std::move(c_mean));
      });
    } catch (const std::exception& e) {
      entry.cv_error = kInf;
      entry.status = e.what();
    }
    table.push_back(std::move(entry));
  }
}

}  // namespace

SelectionResult select_hyperparams(const GramMatrix& K_z, const Matrix& x, const Vector& y,
                                   const std::function<KernelSpec(double)>& l_family,
                                   const std::vector<double>& delta_grid,
                                   const std::vector<double>& l_param_grid,
                                   const CvPlan& plan, const NystromFactors* factors) {
  require(!delta_grid.empty() && !l_param_grid.empty(),
          "select_hyperparams: grids must be non-empty");
  std::vector<CvEntry> table;
  table.reserve(delta_grid.size() * l_param_grid.size());

  for (double l_param : l_param_grid) {
    GramMatrix L;
    try {
      L = gram(l_family(l_param), x, "x");
    } catch (const std::exception& e) {
      for (double delta : delta_grid) table.push_back({delta, l_param, kInf, e.what()});
      continue;
    }
    if (factors != nullptr) {
      run_nystrom_grid(K_z, L.values, y, *factors, delta_grid, l_param, plan, table);
    } else {
      for (double delta : delta_grid) {
        CvEntry entry{delta, l_param, kInf, "ok"};
        try {
          const GpPosterior post = gp_posterior(K_z, L, y, delta);
          entry.cv_error = lmocv_error(post, K_z, y, plan);
        } catch (const std::exception& e) {
          entry.cv_error = kInf;
          entry.status = e.what();
        }
        table.push_back(std::move(entry));
      }
    }
  }

  const CvEntry* best = nullptr;
  for (const auto& e : table) {
    if (!std::isfinite(e.cv_error)) continue;
    if (best == nullptr || e.cv_error < best->cv_error ||
        (e.cv_error == best->cv_error && e.delta > best->delta)) {
      best = &e;
    }
  }
  if (best == nullptr) {
    throw NumericalError("select_hyperparams: every grid point failed numerically");
  }
  return SelectionResult{best->delta, best->l_param, l_family(best->l_param),
                         std::move(table)};
}

SelectionResult select_hyperparams(const Dataset& data, const KernelSpec& kernel_k,
                                   const std::function<KernelSpec(double)>& l_family,
                                   const std::vector<double>& delta_grid,
                                   const std::vector<double>& l_param_grid,
                                   const CvPlan& plan, int nystrom_m,
                                   std::uint64_t nystrom_seed) {
  data.validate();
  const GramMatrix K_z = gram(kernel_k, data.z, "z");
  if (nystrom_m > 0) {
    const NystromFactors factors = nystrom_factors(K_z, nystrom_m, nystrom_seed);
    return select_hyperparams(K_z, data.x, data.y, l_family, delta_grid, l_param_grid, plan,
                              &factors);
  }
  return select_hyperparams(K_z, data.x, data.y, l_family, delta_grid, l_param_grid, plan,
                            nullptr);
}

std::vector<double> default_lambda_grid() {
  return {1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
}

std::vector<double> default_delta_grid(int n) {
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  std::vector<double> grid;
  for (double lambda : default_lambda_grid()) grid.push_back(1.0 / (lambda * n2));
  return grid;
}

std::vector<double> default_sigma_l_grid(const Eigen::Ref<const Matrix>& x) {
  const double med = median_heuristic(x);
  return {0.25 * med, 0.5 * med, med, 2.0 * med, 4.0 * med};
}

}  // namespace mmriv
