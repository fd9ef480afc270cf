#include "mmriv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace mmriv {

namespace {

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InputError(std::string("kernel parameter ") + name + " must be strictly positive");
  }
}

}  // namespace

KernelSpec KernelSpec::gaussian(double sigma) {
  check_positive(sigma, "sigma");
  return KernelSpec(GaussianRBF{sigma});
}

KernelSpec KernelSpec::laplacian(double sigma) {
  check_positive(sigma, "sigma");
  return KernelSpec(Laplacian{sigma});
}

KernelSpec KernelSpec::imq(double c, double gamma) {
  check_positive(c, "c");
  check_positive(gamma, "gamma");
  return KernelSpec(InverseMultiquadric{c, gamma});
}

KernelSpec KernelSpec::sum_of_gaussians(double s1, double s2, double s3) {
  check_positive(s1, "sigma1");
  check_positive(s2, "sigma2");
  check_positive(s3, "sigma3");
  return KernelSpec(SumOfGaussians{{s1, s2, s3}});
}

KernelSpec KernelSpec::ard(Vector lengthscales) {
  require(lengthscales.size() > 0, "ARD kernel needs at least one lengthscale");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    check_positive(lengthscales[i], "lengthscale");
  }
  return KernelSpec(Ard{std::move(lengthscales)});
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  std::visit(
      [&os](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GaussianRBF>) {
          os << "gaussian(sigma=" << k.sigma << ")";
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          os << "laplacian(sigma=" << k.sigma << ")";
        } else if constexpr (std::is_same_v<T, InverseMultiquadric>) {
          os << "imq(c=" << k.c << ",gamma=" << k.gamma << ")";
        } else if constexpr (std::is_same_v<T, SumOfGaussians>) {
          os << "sum_gaussians(" << k.sigmas[0] << "," << k.sigmas[1] << "," << k.sigmas[2]
             << ")";
        } else {
          os << "ard(d=" << k.lengthscales.size() << ")";
        }
      },
      v_);
  return os.str();
}

double eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& z,
            const Eigen::Ref<const Vector>& z_prime) {
  require(z.size() == z_prime.size(), "eval: input dimensions differ");
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GaussianRBF>) {
          const double d2 = (z - z_prime).squaredNorm();
          return std::exp(-d2 / (2.0 * k.sigma * k.sigma));
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          const double d1 = (z - z_prime).cwiseAbs().sum();
          return std::exp(-d1 / k.sigma);
        } else if constexpr (std::is_same_v<T, InverseMultiquadric>) {
          const double d2 = (z - z_prime).squaredNorm();
          return std::pow(k.c * k.c + d2, -k.gamma);
        } else if constexpr (std::is_same_v<T, SumOfGaussians>) {
          const double d2 = (z - z_prime).squaredNorm();
          double s = 0.0;
          for (double sg : k.sigmas) s += std::exp(-d2 / (2.0 * sg * sg));
          return s / 3.0;
        } else {
          require(z.size() == k.lengthscales.size(),
                  "eval: ARD lengthscale count does not match input dimension");
          double q = 0.0;
          for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double d = (z[i] - z_prime[i]) / k.lengthscales[i];
            q += d * d;
          }
          return std::exp(-q / 2.0);
        }
      },
      spec.variant());
}

Matrix squared_distances(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  const Vector an = a.rowwise().squaredNorm();
  const Vector bn = b.rowwise().squaredNorm();
  Matrix d2 = (-2.0 * (a * b.transpose()));
  d2.colwise() += an;
  d2.rowwise() += bn.transpose();
  return d2.cwiseMax(0.0);
}

namespace {

// Gram from a precomputed squared-distance matrix; Laplacian needs L1
// distances and takes the slow path.
Matrix gram_from_sq(const KernelSpec& spec, const Matrix& d2) {
  return std::visit(
      [&](const auto& k) -> Matrix {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GaussianRBF>) {
          return (-d2.array() / (2.0 * k.sigma * k.sigma)).exp();
        } else if constexpr (std::is_same_v<T, InverseMultiquadric>) {
          return (d2.array() + k.c * k.c).pow(-k.gamma);
        } else if constexpr (std::is_same_v<T, SumOfGaussians>) {
          Matrix out = Matrix::Zero(d2.rows(), d2.cols());
          for (double sg : k.sigmas) {
            out.array() += (-d2.array() / (2.0 * sg * sg)).exp();
          }
          return out / 3.0;
        } else {
          throw InputError("gram_from_sq: kernel family needs per-pair evaluation");
        }
      },
      spec.variant());
}

bool uses_squared_distance(const KernelSpec& spec) {
  return std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        return std::is_same_v<T, GaussianRBF> || std::is_same_v<T, InverseMultiquadric> ||
               std::is_same_v<T, SumOfGaussians>;
      },
      spec.variant());
}

Matrix scale_by_lengthscales(const Eigen::Ref<const Matrix>& pts, const Vector& ls) {
  require(pts.cols() == ls.size(), "ARD lengthscale count does not match input dimension");
  return pts * ls.cwiseInverse().asDiagonal();
}

}  // namespace

GramMatrix gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& points,
                const std::string& label) {
  require(points.rows() >= 1, "gram: need at least one point");
  const Eigen::Index n = points.rows();
  Matrix values;
  if (uses_squared_distance(spec)) {
    values = gram_from_sq(spec, squared_distances(points, points));
  } else if (const auto* ard = std::get_if<Ard>(&spec.variant())) {
    const Matrix scaled = scale_by_lengthscales(points, ard->lengthscales);
    values = (-squared_distances(scaled, scaled).array() / 2.0).exp();
  } else {
    values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        values(i, j) = eval(spec, points.row(i).transpose(), points.row(j).transpose());
      }
    }
  }
  // Exact diagonal, then mirror the upper triangle so symmetry holds to
  // the bit.
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i, i) = eval(spec, points.row(i).transpose(), points.row(i).transpose());
  }
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) values(i, j) = values(j, i);
  }
  GramMatrix g;
  g.values = std::move(values);
  g.source = spec.describe() + (label.empty() ? "" : ("@" + label));
  return g;
}

Matrix gram_cross(const KernelSpec& spec, const Eigen::Ref<const Matrix>& a,
                  const Eigen::Ref<const Matrix>& b) {
  require(a.cols() == b.cols(), "gram_cross: input dimensions differ");
  require(a.rows() >= 1 && b.rows() >= 1, "gram_cross: empty input");
  if (uses_squared_distance(spec)) {
    return gram_from_sq(spec, squared_distances(a, b));
  }
  if (const auto* ard = std::get_if<Ard>(&spec.variant())) {
    const Matrix sa = scale_by_lengthscales(a, ard->lengthscales);
    const Matrix sb = scale_by_lengthscales(b, ard->lengthscales);
    return (-squared_distances(sa, sb).array() / 2.0).exp();
  }
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      out(i, j) = eval(spec, a.row(i).transpose(), b.row(j).transpose());
    }
  }
  return out;
}

double median_heuristic(const Eigen::Ref<const Matrix>& points) {
  const Eigen::Index n = points.rows();
  require(n >= 2, "median_heuristic: need at least two points");
  const Matrix d2 = squared_distances(points, points);
  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dists.push_back(std::sqrt(d2(i, j)));
    }
  }
  const size_t count = dists.size();
  const size_t hi = count / 2;
  std::nth_element(dists.begin(), dists.begin() + hi, dists.end());
  double med = dists[hi];
  if (count % 2 == 0) {
    // Mean of the two central order statistics.
    double lo = *std::max_element(dists.begin(), dists.begin() + hi);
    med = 0.5 * (lo + med);
  }
  if (!(med > 0.0)) {
    throw InputError("median_heuristic: all points identical (zero bandwidth is invalid)");
  }
  return med;
}

KernelSpec sum_gaussians_from_median(const Eigen::Ref<const Matrix>& points) {
  const double s1 = median_heuristic(points);
  return KernelSpec::sum_of_gaussians(s1, 0.1 * s1, 10.0 * s1);
}

}  // namespace mmriv
