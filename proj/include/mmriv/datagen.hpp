#pragma once

#include <string>
#include <vector>

#include "mmriv/dataset.hpp"
#include "mmriv/rng.hpp"

namespace mmriv {

/// Structural truths of the low-dimensional scenarios.
enum class TrueFunction { Abs, Linear, Sin, Step };

TrueFunction true_function_from_name(const std::string& name);
std::string true_function_name(TrueFunction f);
double true_function(TrueFunction f, double x);

/// Low-dimensional SEM:
///   Y = f*(X) + e + delta,  X = Z1 + e + gamma,
///   Z ~ Uniform([-3,3]^2), e ~ N(0,1), gamma, delta ~ N(0, 0.1^2).
/// Only the first instrument coordinate drives X. The noise scales are
/// exposed so diagnostics can run the noiseless SEM; defaults match the
/// benchmark scenarios.
struct LowDimSpec {
  TrueFunction f_star = TrueFunction::Sin;
  int n = 0;
  std::uint64_t seed = 0;
  double e_sd = 1.0;
  double gd_sd = 0.1;
};

/// One substream per variable column (z0, z1, e, gamma, delta), split from
/// the seed, so the generated bytes are stable under the documented rule.
Dataset gen_low_dim(const LowDimSpec& spec);

/// One joint draw (x, y, z) from the low-dimensional SEM; feeds the
/// population-risk Monte Carlo diagnostic.
struct LowDimPoint {
  double x;
  double y;
  Eigen::Vector2d z;
};
LowDimPoint draw_low_dim_point(TrueFunction f_star, Rng& rng, double e_sd = 1.0,
                               double gd_sd = 0.1);

/// Mendelian-randomization SEM:
///   Y = beta X + c1 e + delta,  X = sum_i alpha_i Z_i + c2 e + gamma,
///   Z_i ~ Binomial(2, p_i), p_i ~ U(0.1, 0.9),
///   alpha_i ~ U(0.8/d', 1.2/d'), e ~ N(0,1), gamma, delta ~ N(0, 0.1^2).
/// (p, alpha) are drawn once per dataset from param_seed so an experiment
/// can share them across its train/validation/test draws; param_seed
/// defaults to seed when left at 0 and unset.
struct MendelianSpec {
  int d_prime = 16;
  double beta = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  int n = 0;
  std::uint64_t seed = 0;
  std::uint64_t param_seed = 0;
  bool param_seed_set = false;

  std::uint64_t effective_param_seed() const { return param_seed_set ? param_seed : seed; }
};

Dataset gen_mendelian(const MendelianSpec& spec);

/// Shift/scale record for the outcome standardization; scale is the
/// population standard deviation of the training outcomes.
struct YTransform {
  double mean = 0.0;
  double scale = 1.0;
  double apply(double y) const { return (y - mean) / scale; }
  double invert(double y) const { return y * scale + mean; }
};

/// Standardizes train Y to zero mean and unit variance in place; the same
/// transform is applied to every dataset in `others` and to every f_star
/// column, and returned for inverse-mapping predictions.
YTransform standardize_y(Dataset& train, const std::vector<Dataset*>& others);

}  // namespace mmriv
