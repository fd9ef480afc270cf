#include "mmriv/dataset.hpp"

namespace mmriv {

Dataset concat(const Dataset& a, const Dataset& b) {
  a.validate();
  b.validate();
  require(a.d() == b.d() && a.d_instrument() == b.d_instrument(),
          "concat: column counts differ");
  Dataset out;
  out.x.resize(a.n() + b.n(), a.d());
  out.x << a.x, b.x;
  out.y.resize(a.n() + b.n());
  out.y << a.y, b.y;
  out.z.resize(a.n() + b.n(), a.d_instrument());
  out.z << a.z, b.z;
  if (a.f_star && b.f_star) {
    Vector f(a.n() + b.n());
    f << *a.f_star, *b.f_star;
    out.f_star = std::move(f);
  }
  return out;
}

Dataset take_rows(const Dataset& d, const std::vector<int>& idx) {
  Dataset out;
  const int m = static_cast<int>(idx.size());
  out.x.resize(m, d.d());
  out.y.resize(m);
  out.z.resize(m, d.d_instrument());
  Vector f;
  if (d.f_star) f.resize(m);
  for (int i = 0; i < m; ++i) {
    require(idx[i] >= 0 && idx[i] < d.n(), "take_rows: index out of range");
    out.x.row(i) = d.x.row(idx[i]);
    out.y[i] = d.y[idx[i]];
    out.z.row(i) = d.z.row(idx[i]);
    if (d.f_star) f[i] = (*d.f_star)[idx[i]];
  }
  if (d.f_star) out.f_star = std::move(f);
  return out;
}

}  // namespace mmriv
