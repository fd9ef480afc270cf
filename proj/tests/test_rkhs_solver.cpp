#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmriv/rkhs_solver.hpp"
#include "testutil.hpp"

using namespace mmriv;

TEST_CASE("zero outcomes give a zero coefficient vector") {
  auto inst = testutil::random_instance(20, 3);
  inst.data.y.setZero();
  const RkhsModel m = fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, 0.1);
  CHECK(m.alpha.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closed form matches the dense normal-equation oracle") {
  // Laplacian hypothesis kernel: its Gram is comfortably full rank at this
  // size, so the normal equations have a unique solution to compare
  // against. (A very smooth kernel makes L numerically rank deficient and
  // the minimizer unique only up to null-space components.)
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    auto inst = testutil::random_instance(15, seed);
    inst.kernel_l = KernelSpec::laplacian(1.0);
    const double lambda = 1e-3;
    const RkhsModel m = fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, lambda);

    const Matrix L = gram(inst.kernel_l, inst.data.x).values;
    const Matrix W = weight_v(gram(inst.kernel_k, inst.data.z)).values;
    const Vector oracle = testutil::dense_normal_solve(L, W, inst.data.y, lambda);
    CHECK((m.alpha - oracle).norm() / oracle.norm() < 1e-6);
  }
}

TEST_CASE("huge regularization pushes alpha to zero") {
  const auto inst = testutil::random_instance(40, 9);
  const RkhsModel m = fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, 1e6);
  CHECK(m.alpha.norm() < 1e-4);
}

TEST_CASE("first-order stationarity on random instances") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    for (int n : {20, 80, 200}) {
      const auto inst = testutil::random_instance(n, substream(seed, n));
      const double lambda = 1e-3;
      const RkhsModel m = fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, lambda);
      const Matrix L = gram(inst.kernel_l, inst.data.x).values;
      const Matrix W = weight_v(gram(inst.kernel_k, inst.data.z)).values;
      const Vector rhs = L * (W * inst.data.y);
      const Vector lhs = L * (W * (L * m.alpha)) + lambda * (L * m.alpha);
      CHECK((lhs - rhs).norm() / rhs.norm() < 1e-8);
    }
  }
}

TEST_CASE("no descent restart beats the closed form") {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const auto inst = testutil::random_instance(12, seed);
    const double lambda = 1e-3;
    const RkhsModel m = fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, lambda);
    const double at_fit =
        rkhs_objective(inst.data, inst.kernel_k, inst.kernel_l, lambda, m.alpha);
    const Matrix L = gram(inst.kernel_l, inst.data.x).values;
    const Matrix W = weight_v(gram(inst.kernel_k, inst.data.z)).values;
    const double best =
        testutil::descent_best_objective(L, W, inst.data.y, lambda, 20, substream(seed, 7));
    CHECK(at_fit <= best + 1e-9);
  }
}

TEST_CASE("objective value identities") {
  const auto inst = testutil::random_instance(25, 31);
  const double lambda = 1e-2;
  const Matrix L = gram(inst.kernel_l, inst.data.x).values;
  const WeightMatrix W = weight_v(gram(inst.kernel_k, inst.data.z));

  // alpha = 0 leaves only the weighted outcome norm.
  const Vector zero = Vector::Zero(25);
  CHECK(rkhs_objective(inst.data, inst.kernel_k, inst.kernel_l, lambda, zero) ==
        doctest::Approx(inst.data.y.dot(W.values * inst.data.y)));

  // The fit is a local minimum against small random perturbations.
  const RkhsModel m = fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, lambda);
  const double at_fit = rkhs_objective_with(L, W, inst.data.y, lambda, m.alpha);
  for (int t = 0; t < 100; ++t) {
    Vector noise = testutil::random_vector(25, substream(1234, t));
    noise *= 0.01 / noise.norm();
    CHECK(at_fit <= rkhs_objective_with(L, W, inst.data.y, lambda, m.alpha + noise) + 1e-12);
  }

  // lambda = 0: the dense-oracle solution leaves only the residual risk.
  const Vector a0 = testutil::dense_normal_solve(L, W.values, inst.data.y, 0.0);
  const Vector r = inst.data.y - L * a0;
  CHECK(rkhs_objective_with(L, W, inst.data.y, 0.0, a0) ==
        doctest::Approx(r.dot(W.values * r)));
}

TEST_CASE("predict") {
  const auto inst = testutil::random_instance(10, 41);
  RkhsModel m = fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, 0.1);

  m.alpha.setZero();
  CHECK(predict(m, inst.data.x).cwiseAbs().maxCoeff() == 0.0);

  const RkhsModel fitted = fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, 0.1);
  const Matrix L = gram(inst.kernel_l, inst.data.x).values;
  CHECK((predict(fitted, inst.data.x) - L * fitted.alpha).cwiseAbs().maxCoeff() < 1e-12);

  // Single training point with alpha = 2: prediction at that point is 2.
  Matrix x1(1, 1);
  x1 << 0.7;
  RkhsModel single{(Vector(1) << 2.0).finished(), x1, KernelSpec::gaussian(1.0), 0.1, 0.0};
  CHECK(predict(single, x1)(0) == doctest::Approx(2.0));

  Matrix wrong(3, 2);
  wrong.setZero();
  CHECK_THROWS_AS(predict(fitted, wrong), InputError);
}

TEST_CASE("duplicate treatments take the jitter fallback without failing") {
  auto inst = testutil::random_instance(20, 51);
  // Duplicate every treatment row pairwise: L becomes exactly singular.
  for (int i = 0; i < 10; ++i) inst.data.x.row(2 * i + 1) = inst.data.x.row(2 * i);
  const double lambda = 1e-4;
  const RkhsModel m = fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, lambda);
  CHECK(m.alpha.allFinite());
  // The solution still satisfies the (jittered) normal equations.
  Matrix L = gram(inst.kernel_l, inst.data.x).values;
  L.diagonal().array() += m.jitter_used;
  const Matrix W = weight_v(gram(inst.kernel_k, inst.data.z)).values;
  const Vector rhs = L * (W * inst.data.y);
  const Vector lhs = L * (W * (L * m.alpha)) + lambda * (L * m.alpha);
  CHECK((lhs - rhs).norm() / rhs.norm() < 1e-8);
}

TEST_CASE("input validation") {
  const auto inst = testutil::random_instance(10, 61);
  CHECK_THROWS_AS(fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, 0.0), InputError);
  CHECK_THROWS_AS(fit_rkhs(inst.data, inst.kernel_k, inst.kernel_l, -1.0), InputError);
  auto tiny = testutil::random_instance(1, 62);
  CHECK_THROWS_AS(fit_rkhs(tiny.data, tiny.kernel_k, tiny.kernel_l, 0.1), InputError);
}
