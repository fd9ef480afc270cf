#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/LU>

#include "mmriv/datagen.hpp"
#include "mmriv/model_selection.hpp"
#include "mmriv/rkhs_solver.hpp"
#include "testutil.hpp"

using namespace mmriv;

namespace {

// Leave-out refit oracle: removes a fold's likelihood from the full
// posterior through the explicit two-inversion route
//   B^{-1} = C_de^{-1} - K_de,  b = B (C_de^{-1} c_de - K_de y_de),
// and accumulates (b - y_de)^T K_de (b - y_de). Independent of the
// single-solve path inside lmocv_error.
double refit_cv_oracle(const GpPosterior& post, const GramMatrix& K_z, const Vector& y,
                       const CvPlan& plan) {
  double total = 0.0;
  for (const auto& idx : plan.folds) {
    const int m = static_cast<int>(idx.size());
    Matrix c_de(m, m), k_de(m, m);
    Vector c_mean(m), y_de(m);
    for (int i = 0; i < m; ++i) {
      c_mean[i] = post.c[idx[i]];
      y_de[i] = y[idx[i]];
      for (int j = 0; j < m; ++j) {
        c_de(i, j) = post.C(idx[i], idx[j]);
        k_de(i, j) = K_z.values(idx[i], idx[j]);
      }
    }
    const Matrix c_inv = c_de.fullPivLu().inverse();
    const Matrix b_cov = (c_inv - k_de).fullPivLu().inverse();
    const Vector b = b_cov * (c_inv * c_mean - k_de * y_de);
    const Vector r = b - y_de;
    total += r.dot(k_de * r);
  }
  return total;
}

GpPosterior posterior_for(const testutil::RandomInstance& inst, double delta,
                          double sigma_l = 1.0) {
  const GramMatrix K = gram(inst.kernel_k, inst.data.z);
  const GramMatrix L = gram(KernelSpec::gaussian(sigma_l), inst.data.x);
  return gp_posterior(K, L, inst.data.y, delta);
}

}  // namespace

TEST_CASE("scalar posterior closed form") {
  GramMatrix K{Matrix::Ones(1, 1), "k"};
  GramMatrix L{Matrix::Ones(1, 1), "l"};
  Vector y(1);
  y << 3.0;
  const GpPosterior post = gp_posterior(K, L, y, 1.0);
  CHECK(post.C(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(post.c[0] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("prior dominates as delta vanishes") {
  const auto inst = testutil::random_instance(30, 2);
  const GpPosterior post = posterior_for(inst, 1e-12);
  CHECK(post.c.norm() < 1e-6 * inst.data.y.norm());
}

TEST_CASE("posterior mean identity c = C K y") {
  const auto inst = testutil::random_instance(25, 3);
  const GramMatrix K = gram(inst.kernel_k, inst.data.z);
  const GramMatrix L = gram(inst.kernel_l, inst.data.x);
  const GpPosterior post = gp_posterior(K, L, inst.data.y, 0.05);
  const Vector again = post.C * (K.values * inst.data.y);
  CHECK((post.c - again).norm() / again.norm() < 1e-8);
  CHECK((post.C - post.C.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("posterior mean equals the regularized minimizer at delta = 1/(lambda n^2)") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 10 + static_cast<int>(seed % 5) * 12;  // 10..58
    const auto inst = testutil::random_instance(n, substream(100, seed));
    const double lambda = 1e-3;
    const double delta = 1.0 / (lambda * n * n);

    const GramMatrix K = gram(inst.kernel_k, inst.data.z);
    const GramMatrix L = gram(inst.kernel_l, inst.data.x);
    const GpPosterior post = gp_posterior(K, L, inst.data.y, delta);
    const RkhsModel m =
        fit_rkhs_with(L.values, weight_v(K), inst.data.y, inst.data.x, inst.kernel_l, lambda);
    const Vector la = L.values * m.alpha;
    CHECK((post.c - la).cwiseAbs().maxCoeff() <
          1e-8 * (1.0 + inst.data.y.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("low-rank posterior matches the exact one at full rank") {
  const auto inst = testutil::random_instance(40, 5);
  const GramMatrix K = gram(inst.kernel_k, inst.data.z);
  const GramMatrix L = gram(inst.kernel_l, inst.data.x);
  const NystromFactors f = nystrom_factors(K, 40, 1);
  for (double delta : {1e-4, 1e-2, 1.0}) {
    const GpPosterior exact = gp_posterior(K, L, inst.data.y, delta);
    const GpPosterior low = gp_posterior_nystrom(f, L, inst.data.y, delta);
    CHECK(!low.exact);
    CHECK((low.C - exact.C).cwiseAbs().maxCoeff() / exact.C.cwiseAbs().maxCoeff() < 1e-6);
    CHECK((low.c - exact.c).norm() / (exact.c.norm() + 1e-300) < 1e-6);
  }

  Vector zero = Vector::Zero(40);
  const GpPosterior z = gp_posterior_nystrom(f, L, zero, 0.1);
  CHECK(z.c.cwiseAbs().maxCoeff() == 0.0);

  const GpPosterior small = gp_posterior_nystrom(f, L, inst.data.y, 1e-12);
  CHECK(small.c.norm() < 1e-6 * inst.data.y.norm());
}

TEST_CASE("cv plan construction") {
  const CvPlan plan = make_cv_plan(40, 2, 9);
  CHECK(plan.folds.size() == 20);
  std::vector<int> seen;
  for (const auto& f : plan.folds) {
    CHECK(f.size() == 2);
    seen.insert(seen.end(), f.begin(), f.end());
  }
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 40; ++i) CHECK(seen[i] == i);

  const CvPlan odd = make_cv_plan(41, 2, 9);  // leftover point stays out
  CHECK(odd.folds.size() == 20);

  CHECK_THROWS_AS(make_cv_plan(5, 0, 1), InputError);
  CHECK_THROWS_AS(make_cv_plan(5, 6, 1), InputError);
}

TEST_CASE("clustered plan: disjoint folds of close instruments") {
  const Matrix z = testutil::random_matrix(103, 2, 15);
  const CvPlan plan = make_clustered_cv_plan(z, 10);
  CHECK(plan.folds.size() == 10);  // 103 points: 3 dropped by the tail
  std::vector<int> seen;
  for (const auto& f : plan.folds) {
    CHECK(f.size() == 10);
    seen.insert(seen.end(), f.begin(), f.end());
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());  // disjoint

  // Fold members are closer to each other than random points are: compare
  // the mean within-fold distance against the global mean distance.
  const Matrix d2 = squared_distances(z, z);
  double within = 0.0;
  int count = 0;
  for (const auto& f : plan.folds) {
    for (size_t a = 0; a < f.size(); ++a) {
      for (size_t b = a + 1; b < f.size(); ++b) {
        within += std::sqrt(d2(f[a], f[b]));
        ++count;
      }
    }
  }
  within /= count;
  const double global = d2.cwiseSqrt().sum() / (103.0 * 102.0);
  CHECK(within < 0.5 * global);

  // Determinism: same inputs, same folds.
  const CvPlan again = make_clustered_cv_plan(z, 10);
  CHECK(again.folds == plan.folds);
}

TEST_CASE("analytical LMOCV equals the explicit refit oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = testutil::random_instance(40, substream(500, seed));
    const GramMatrix K = gram(inst.kernel_k, inst.data.z);
    const GramMatrix L = gram(inst.kernel_l, inst.data.x);
    const GpPosterior post = gp_posterior(K, L, inst.data.y, 0.02);
    for (int M : {1, 2, 5}) {
      const CvPlan plan = make_cv_plan(40, M, substream(seed, M));
      const double analytic = lmocv_error(post, K, inst.data.y, plan);
      const double oracle = refit_cv_oracle(post, K, inst.data.y, plan);
      CHECK(testutil::rel_diff(analytic, oracle) < 1e-8);
    }
  }
}

TEST_CASE("single all-in fold is a defined boundary case") {
  const auto inst = testutil::random_instance(12, 77);
  const GramMatrix K = gram(inst.kernel_k, inst.data.z);
  const GramMatrix L = gram(inst.kernel_l, inst.data.x);
  const GpPosterior post = gp_posterior(K, L, inst.data.y, 0.1);
  const CvPlan plan = make_cv_plan(12, 12, 3);
  CHECK(plan.folds.size() == 1);
  CHECK(std::isfinite(lmocv_error(post, K, inst.data.y, plan)));
}

TEST_CASE("cv error is invariant under fold order") {
  const auto inst = testutil::random_instance(30, 88);
  const GramMatrix K = gram(inst.kernel_k, inst.data.z);
  const GramMatrix L = gram(inst.kernel_l, inst.data.x);
  const GpPosterior post = gp_posterior(K, L, inst.data.y, 0.05);
  CvPlan plan = make_cv_plan(30, 2, 4);
  const double forward = lmocv_error(post, K, inst.data.y, plan);
  std::reverse(plan.folds.begin(), plan.folds.end());
  CHECK(lmocv_error(post, K, inst.data.y, plan) == doctest::Approx(forward).epsilon(1e-12));
}

TEST_CASE("selection: single grid point is returned") {
  const auto inst = testutil::random_instance(20, 6);
  const CvPlan plan = make_cv_plan(20, 2, 1);
  const auto l_family = [](double s) { return KernelSpec::gaussian(s); };
  const SelectionResult sel =
      select_hyperparams(inst.data, inst.kernel_k, l_family, {0.01}, {1.0}, plan);
  CHECK(sel.best_delta == 0.01);
  CHECK(sel.best_l_param == 1.0);
  CHECK(sel.table.size() == 1);
  CHECK(sel.table[0].status == "ok");
}

TEST_CASE("selection: exact ties break toward the larger delta") {
  // Zero outcomes give zero posterior mean and zero residual on every
  // fold, so every grid point has cv_error 0.
  auto inst = testutil::random_instance(16, 7);
  inst.data.y.setZero();
  const CvPlan plan = make_cv_plan(16, 2, 2);
  const auto l_family = [](double s) { return KernelSpec::gaussian(s); };
  const SelectionResult sel =
      select_hyperparams(inst.data, inst.kernel_k, l_family, {0.001, 0.5, 0.01}, {1.0}, plan);
  CHECK(sel.best_delta == 0.5);
}

TEST_CASE("selection: fast low-rank path equals the dense path") {
  const auto inst = testutil::random_instance(60, 13);
  const GramMatrix K = gram(inst.kernel_k, inst.data.z);
  const NystromFactors f = nystrom_factors(K, 60, 21);
  const CvPlan plan = make_cv_plan(60, 2, 3);
  const auto l_family = [](double s) { return KernelSpec::gaussian(s); };
  const std::vector<double> deltas = {1e-4, 1e-2, 1.0};
  const std::vector<double> sigmas = {0.5, 1.0, 2.0};

  const SelectionResult fast = select_hyperparams(K, inst.data.x, inst.data.y, l_family,
                                                  deltas, sigmas, plan, &f);
  // Dense reference: full covariance from the same factors per grid point.
  size_t idx = 0;
  for (double sigma : sigmas) {
    const GramMatrix L = gram(KernelSpec::gaussian(sigma), inst.data.x);
    for (double delta : deltas) {
      const GpPosterior post = gp_posterior_nystrom(f, L, inst.data.y, delta);
      const double dense = lmocv_error(post, K, inst.data.y, plan);
      CHECK(testutil::rel_diff(fast.table[idx].cv_error, dense) < 1e-9);
      ++idx;
    }
  }
}

TEST_CASE("selection: smooth truth picks an interior bandwidth") {
  int interior = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Dataset data = gen_low_dim({TrueFunction::Sin, 100, substream(900, seed)});
    std::vector<Dataset*> none;
    standardize_y(data, none);
    const KernelSpec k = sum_gaussians_from_median(data.z);
    const CvPlan plan = make_cv_plan(100, 2, substream(901, seed));
    const std::vector<double> sigmas = default_sigma_l_grid(data.x);
    const auto l_family = [](double s) { return KernelSpec::gaussian(s); };
    const SelectionResult sel = select_hyperparams(data, k, l_family,
                                                   default_delta_grid(100), sigmas, plan);
    if (sel.best_l_param > sigmas.front() && sel.best_l_param < sigmas.back()) ++interior;
  }
  CHECK(interior >= 7);
}

TEST_CASE("selection: empty grids are rejected") {
  const auto inst = testutil::random_instance(10, 3);
  const CvPlan plan = make_cv_plan(10, 2, 1);
  const auto l_family = [](double s) { return KernelSpec::gaussian(s); };
  CHECK_THROWS_AS(select_hyperparams(inst.data, inst.kernel_k, l_family, {}, {1.0}, plan),
                  InputError);
  CHECK_THROWS_AS(select_hyperparams(inst.data, inst.kernel_k, l_family, {0.1}, {}, plan),
                  InputError);
}
