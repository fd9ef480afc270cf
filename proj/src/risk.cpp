#include "mmriv/risk.hpp"

namespace mmriv {

WeightMatrix weight_v(const GramMatrix& K) {
  require(K.values.rows() == K.values.cols() && K.values.rows() >= 1,
          "weight_v: Gram matrix must be square and non-empty");
  const double n = static_cast<double>(K.n());
  return WeightMatrix{K.values / (n * n), WeightMatrix::Variant::V};
}

WeightMatrix weight_u(const GramMatrix& K) {
  require(K.values.rows() == K.values.cols(), "weight_u: Gram matrix must be square");
  const int n = K.n();
  require(n >= 2, "weight_u: U-statistic undefined for n < 2");
  Matrix w = K.values / (static_cast<double>(n) * (n - 1));
  w.diagonal().setZero();
  return WeightMatrix{std::move(w), WeightMatrix::Variant::U};
}

double empirical_risk(const Eigen::Ref<const Vector>& residuals, const WeightMatrix& w) {
  require(residuals.size() == w.values.rows(),
          "empirical_risk: residual length does not match weight matrix");
  return residuals.dot(w.values * residuals);
}

Vector v_risk_blocked(const Eigen::Ref<const Matrix>& residual_cols, const KernelSpec& k,
                      const Eigen::Ref<const Matrix>& z, int block) {
  const Eigen::Index n = z.rows();
  require(residual_cols.rows() == n, "v_risk_blocked: residual length does not match z");
  require(block >= 1, "v_risk_blocked: block must be positive");
  Vector acc = Vector::Zero(residual_cols.cols());
  for (Eigen::Index r0 = 0; r0 < n; r0 += block) {
    const Eigen::Index rows = std::min<Eigen::Index>(block, n - r0);
    const Matrix kb = gram_cross(k, z.middleRows(r0, rows), z);
    // acc_c += r_c[r0:r0+rows]^T K_block r_c, one column at a time.
    const Matrix partial = kb * residual_cols;  // rows x C
    for (Eigen::Index c = 0; c < residual_cols.cols(); ++c) {
      acc[c] += residual_cols.col(c).segment(r0, rows).dot(partial.col(c));
    }
  }
  return acc / (static_cast<double>(n) * static_cast<double>(n));
}

double population_risk_mc(const std::function<double(double)>& f,
                          const std::function<SemSample(Rng&)>& draw, const KernelSpec& k,
                          int reps, std::uint64_t seed) {
  require(reps >= 1, "population_risk_mc: reps must be at least 1");
  Rng rng(seed);
  double acc = 0.0;
  for (int r = 0; r < reps; ++r) {
    const SemSample a = draw(rng);
    const SemSample b = draw(rng);  // independent copy
    acc += (a.y - f(a.x)) * (b.y - f(b.x)) * eval(k, a.z, b.z);
  }
  return acc / reps;
}

}  // namespace mmriv
