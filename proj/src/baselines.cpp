#include "mmriv/baselines.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "mmriv/rng.hpp"

namespace mmriv {

namespace {

// Least squares of each rhs column on [design, 1]; returns (d+1) x rhs_cols
// with the intercept in the last row. Throws on rank deficiency.
Matrix least_squares_affine(const Eigen::Ref<const Matrix>& design,
                            const Eigen::Ref<const Matrix>& rhs, const char* what) {
  Matrix a(design.rows(), design.cols() + 1);
  a << design, Vector::Ones(design.rows());
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < a.cols()) {
    throw NumericalError(std::string(what) + ": design matrix is rank deficient");
  }
  return qr.solve(rhs);
}

std::vector<std::vector<int>> kfold_indices(int n, int folds, std::uint64_t seed) {
  require(folds >= 2 && folds <= n, "cross-validation needs 2 <= folds <= n");
  Rng rng(seed);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = 0; i < n - 1; ++i) {
    int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::vector<int>> out(folds);
  for (int i = 0; i < n; ++i) out[i % folds].push_back(perm[i]);
  return out;
}

struct Standardizer {
  Vector mean, scale;
  Matrix apply(const Eigen::Ref<const Matrix>& f) const {
    Matrix out = f;
    out.rowwise() -= mean.transpose();
    out.array().rowwise() /= scale.transpose().array();
    return out;
  }
};

Standardizer make_standardizer(const Eigen::Ref<const Matrix>& f) {
  Standardizer s;
  s.mean = f.colwise().mean();
  s.scale = ((f.rowwise() - s.mean.transpose()).array().square().colwise().mean())
                .sqrt()
                .transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale[j] > 0.0)) s.scale[j] = 1.0;  // constant feature
  }
  return s;
}

// Ridge on standardized features with unpenalized intercept.
struct RidgeFit {
  Vector coef;
  double intercept;
};

RidgeFit ridge_fit(const Matrix& features, const Vector& y, double ridge) {
  const double ymean = y.mean();
  Matrix gram = features.transpose() * features;
  gram.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("ridge_fit: factorization failed");
  }
  Vector coef = ldlt.solve(features.transpose() * (y.array() - ymean).matrix());
  if (!coef.allFinite()) throw NumericalError("ridge_fit: non-finite coefficients");
  return {std::move(coef), ymean};
}

}  // namespace

Matrix polynomial_features(const Eigen::Ref<const Matrix>& v, int degree) {
  require(degree >= 1, "polynomial_features: degree must be at least 1");
  Matrix out(v.rows(), v.cols() * degree);
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Vector col = v.col(j);
    for (int p = 0; p < degree; ++p) {
      out.col(j * degree + p) = col;
      if (p + 1 < degree) col = col.cwiseProduct(v.col(j));
    }
  }
  return out;
}

LinearModel fit_2sls(const Dataset& data) {
  data.validate();
  const int n = data.n();
  require(n > data.d() + data.d_instrument(), "fit_2sls: need n > d + d'");

  // Stage 1: each treatment column on [Z, 1].
  const Matrix stage1 = least_squares_affine(data.z, data.x, "fit_2sls stage 1");
  Matrix fitted = data.z * stage1.topRows(data.d_instrument());
  fitted.rowwise() += stage1.row(data.d_instrument());

  // First-stage strength: classic F statistic, minimum over columns.
  double min_f = std::numeric_limits<double>::infinity();
  for (int j = 0; j < data.d(); ++j) {
    const double tss = (data.x.col(j).array() - data.x.col(j).mean()).square().sum();
    const double rss = (data.x.col(j) - fitted.col(j)).squaredNorm();
    const int dof = n - data.d_instrument() - 1;
    const double f =
        ((tss - rss) / std::max(1, data.d_instrument())) / std::max(rss / dof, 1e-300);
    min_f = std::min(min_f, f);
  }

  // Stage 2: outcome on [X_hat, 1].
  const Matrix stage2 = least_squares_affine(fitted, data.y, "fit_2sls stage 2");

  LinearModel model;
  model.coefficients = stage2.col(0);
  model.first_stage_f = min_f;
  model.weak_instrument = min_f < 10.0;
  if (!model.coefficients.allFinite()) {
    throw NumericalError("fit_2sls: non-finite coefficients");
  }
  return model;
}

Vector predict(const LinearModel& model, const Eigen::Ref<const Matrix>& x) {
  require(x.cols() + 1 == model.coefficients.size(),
          "predict(2sls): treatment dimension mismatch");
  return (x * model.coefficients.head(x.cols())).array() +
         model.coefficients[x.cols()];
}

namespace {

PolyRidgeModel fit_poly2sls_fixed(const Dataset& data, int degree, double ridge) {
  PolyRidgeModel m;
  m.degree = degree;
  m.ridge = ridge;

  const Matrix zf_raw = polynomial_features(data.z, degree);
  const Standardizer zs = make_standardizer(zf_raw);
  const Matrix zf = zs.apply(zf_raw);
  m.stage1_mean = zs.mean;
  m.stage1_scale = zs.scale;

  m.stage1_coef.resize(zf.cols(), data.d());
  m.stage1_intercept.resize(data.d());
  for (int j = 0; j < data.d(); ++j) {
    RidgeFit fit = ridge_fit(zf, data.x.col(j), ridge);
    m.stage1_coef.col(j) = fit.coef;
    m.stage1_intercept[j] = fit.intercept;
  }
  Matrix x_hat = zf * m.stage1_coef;
  x_hat.rowwise() += m.stage1_intercept.transpose();

  const Matrix xf_raw = polynomial_features(x_hat, degree);
  const Standardizer xs = make_standardizer(xf_raw);
  m.stage2_mean = xs.mean;
  m.stage2_scale = xs.scale;
  RidgeFit fit2 = ridge_fit(xs.apply(xf_raw), data.y, ridge);
  m.stage2_coef = fit2.coef;
  m.stage2_intercept = fit2.intercept;
  return m;
}

}  // namespace

PolyRidgeModel fit_poly2sls(const Dataset& data, int max_degree,
                            const std::vector<double>& ridge_grid, int cv_folds,
                            std::uint64_t seed) {
  data.validate();
  require(max_degree >= 1, "fit_poly2sls: max_degree must be at least 1");
  require(!ridge_grid.empty(), "fit_poly2sls: ridge grid must be non-empty");
  const int n = data.n();
  require(n > (max_degree * std::max(data.d(), data.d_instrument()) + 1) * 2,
          "fit_poly2sls: not enough rows for the requested degree");

  const auto folds = kfold_indices(n, cv_folds, seed);
  int best_degree = 1;
  double best_ridge = ridge_grid.front();
  double best_err = std::numeric_limits<double>::infinity();

  for (int degree = 1; degree <= max_degree; ++degree) {
    for (double ridge : ridge_grid) {
      double err = 0.0;
      bool ok = true;
      for (const auto& test_idx : folds) {
        std::vector<char> is_test(n, 0);
        for (int i : test_idx) is_test[i] = 1;
        std::vector<int> train_idx;
        train_idx.reserve(n - test_idx.size());
        for (int i = 0; i < n; ++i) {
          if (!is_test[i]) train_idx.push_back(i);
        }
        try {
          const PolyRidgeModel m = fit_poly2sls_fixed(take_rows(data, train_idx), degree, ridge);
          const Dataset test = take_rows(data, test_idx);
          // Stage-2 prediction error through both fitted stages.
          const Matrix zf = polynomial_features(test.z, degree);
          Matrix zstd = zf;
          zstd.rowwise() -= m.stage1_mean.transpose();
          zstd.array().rowwise() /= m.stage1_scale.transpose().array();
          Matrix x_hat = zstd * m.stage1_coef;
          x_hat.rowwise() += m.stage1_intercept.transpose();
          err += (predict(m, x_hat) - test.y).squaredNorm();
        } catch (const NumericalError&) {
          ok = false;
          break;
        }
      }
      if (ok && err < best_err) {
        best_err = err;
        best_degree = degree;
        best_ridge = ridge;
      }
    }
  }
  if (!std::isfinite(best_err)) {
    throw NumericalError("fit_poly2sls: every (degree, ridge) candidate failed");
  }
  return fit_poly2sls_fixed(data, best_degree, best_ridge);
}

Vector predict(const PolyRidgeModel& model, const Eigen::Ref<const Matrix>& x) {
  const Matrix xf_raw = polynomial_features(x, model.degree);
  require(xf_raw.cols() == model.stage2_coef.size(),
          "predict(poly2sls): treatment dimension mismatch");
  Matrix xf = xf_raw;
  xf.rowwise() -= model.stage2_mean.transpose();
  xf.array().rowwise() /= model.stage2_scale.transpose().array();
  return (xf * model.stage2_coef).array() + model.stage2_intercept;
}

RkhsModel fit_direct_ridge(const Dataset& data, const KernelSpec& kernel_l,
                           const std::vector<double>& lambda_grid, int cv_folds,
                           std::uint64_t seed) {
  data.validate();
  require(data.n() >= 2, "fit_direct_ridge: need at least two samples");
  require(!lambda_grid.empty(), "fit_direct_ridge: lambda grid must be non-empty");

  const int n = data.n();
  double best_lambda = lambda_grid.front();
  if (lambda_grid.size() > 1) {
    const auto folds = kfold_indices(n, cv_folds, seed);
    double best_err = std::numeric_limits<double>::infinity();
    for (double lambda : lambda_grid) {
      double err = 0.0;
      bool ok = true;
      for (const auto& test_idx : folds) {
        std::vector<char> is_test(n, 0);
        for (int i : test_idx) is_test[i] = 1;
        std::vector<int> train_idx;
        for (int i = 0; i < n; ++i) {
          if (!is_test[i]) train_idx.push_back(i);
        }
        const Dataset tr = take_rows(data, train_idx);
        const Dataset te = take_rows(data, test_idx);
        try {
          const GramMatrix L = gram(kernel_l, tr.x, "x");
          const RkhsModel m = fit_krr(L.values, tr.y, tr.x, kernel_l, lambda);
          err += (predict(m, te.x) - te.y).squaredNorm();
        } catch (const NumericalError&) {
          ok = false;
          break;
        }
      }
      if (ok && err < best_err) {
        best_err = err;
        best_lambda = lambda;
      }
    }
    if (!std::isfinite(best_err)) {
      throw NumericalError("fit_direct_ridge: every lambda candidate failed");
    }
  }
  const GramMatrix L = gram(kernel_l, data.x, "x");
  return fit_krr(L.values, data.y, data.x, kernel_l, best_lambda);
}

}  // namespace mmriv
