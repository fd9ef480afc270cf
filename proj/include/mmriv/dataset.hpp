#pragma once

#include <optional>
#include <vector>

#include "mmriv/common.hpp"

namespace mmriv {

/// Aligned sample: treatments x (n x d), outcomes y (n), instruments z
/// (n x d'), plus optional ground-truth structural values f*(x) used only
/// for scoring.
struct Dataset {
  Matrix x;
  Vector y;
  Matrix z;
  std::optional<Vector> f_star;

  int n() const { return static_cast<int>(x.rows()); }
  int d() const { return static_cast<int>(x.cols()); }
  int d_instrument() const { return static_cast<int>(z.cols()); }

  void validate() const {
    require(x.rows() >= 1, "Dataset: need at least one row");
    require(y.size() == x.rows() && z.rows() == x.rows(),
            "Dataset: row counts of x, y, z differ");
    if (f_star) {
      require(f_star->size() == x.rows(), "Dataset: f_star length differs from n");
    }
    auto finite = [](const auto& m) { return m.allFinite(); };
    require(finite(x) && finite(y) && finite(z) && (!f_star || finite(*f_star)),
            "Dataset: entries must be finite");
  }
};

/// Row-concatenation of two aligned datasets (train + validation pooling).
Dataset concat(const Dataset& a, const Dataset& b);

/// Rows of d at the given indices.
Dataset take_rows(const Dataset& d, const std::vector<int>& idx);

}  // namespace mmriv
