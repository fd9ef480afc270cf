#pragma once

#include <string>
#include <variant>

#include "mmriv/common.hpp"

namespace mmriv {

// Kernel families on the instrument and hypothesis spaces. All are bounded
// with k(z,z) <= 1 except ARD (also 1 at zero distance) and all parameters
// are validated strictly positive at construction.

struct GaussianRBF {
  double sigma;
};

struct Laplacian {
  double sigma;
};

struct InverseMultiquadric {
  double c;
  double gamma;
};

/// Equal-weight (1/3 each) sum of three Gaussians; the usual setup is
/// sigma = (s, 0.1 s, 10 s) with s the median interpoint distance.
struct SumOfGaussians {
  double sigmas[3];
};

/// exp(-sum_d (z_d - z'_d)^2 / (2 l_d^2)), one lengthscale per dimension.
struct Ard {
  Vector lengthscales;
};

class KernelSpec {
 public:
  using Variant =
      std::variant<GaussianRBF, Laplacian, InverseMultiquadric, SumOfGaussians, Ard>;

  static KernelSpec gaussian(double sigma);
  static KernelSpec laplacian(double sigma);
  static KernelSpec imq(double c, double gamma);
  static KernelSpec sum_of_gaussians(double s1, double s2, double s3);
  static KernelSpec ard(Vector lengthscales);

  const Variant& variant() const { return v_; }

  /// Family tag plus parameters, e.g. "gaussian(sigma=0.7)". Also used as
  /// the GramMatrix source identifier.
  std::string describe() const;

 private:
  explicit KernelSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

struct GramMatrix {
  Matrix values;       // n x n, symmetric by construction
  std::string source;  // kernel description + input set label
  int n() const { return static_cast<int>(values.rows()); }
};

/// Pointwise kernel evaluation k(z, z').
double eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& z,
            const Eigen::Ref<const Vector>& z_prime);

/// Dense Gram matrix on one point set (rows = points).
GramMatrix gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& points,
                const std::string& label = "");

/// Rectangular cross-kernel matrix k(a_i, b_j).
Matrix gram_cross(const KernelSpec& spec, const Eigen::Ref<const Matrix>& a,
                  const Eigen::Ref<const Matrix>& b);

/// Squared Euclidean distance matrix via the clamped expansion
/// max(|a|^2 + |b|^2 - 2<a,b>, 0); shared by the Gram builders and the
/// median heuristic.
Matrix squared_distances(const Eigen::Ref<const Matrix>& a,
                         const Eigen::Ref<const Matrix>& b);

/// Median of the n(n-1)/2 pairwise Euclidean distances; even count takes
/// the mean of the two central order statistics. Throws if all points
/// coincide (a zero bandwidth is invalid).
double median_heuristic(const Eigen::Ref<const Matrix>& points);

/// Sum-of-Gaussians spec with sigma_1 = median, sigma_2 = 0.1 sigma_1,
/// sigma_3 = 10 sigma_1.
KernelSpec sum_gaussians_from_median(const Eigen::Ref<const Matrix>& points);

}  // namespace mmriv
