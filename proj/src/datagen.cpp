#include "mmriv/datagen.hpp"

#include <cmath>

namespace mmriv {

namespace {

// Column tags of the stream-splitting rule.
enum : std::uint64_t {
  kTagZ0 = 1,
  kTagZ1 = 2,
  kTagE = 3,
  kTagGamma = 4,
  kTagDelta = 5,
  kTagMendelP = 100,
  kTagMendelAlpha = 101,
  kTagMendelZBase = 200,
};

}  // namespace

TrueFunction true_function_from_name(const std::string& name) {
  if (name == "abs") return TrueFunction::Abs;
  if (name == "linear") return TrueFunction::Linear;
  if (name == "sin") return TrueFunction::Sin;
  if (name == "step") return TrueFunction::Step;
  throw InputError("unknown true function '" + name + "' (abs|linear|sin|step)");
}

std::string true_function_name(TrueFunction f) {
  switch (f) {
    case TrueFunction::Abs: return "abs";
    case TrueFunction::Linear: return "linear";
    case TrueFunction::Sin: return "sin";
    case TrueFunction::Step: return "step";
  }
  throw InputError("true_function_name: invalid enum");
}

double true_function(TrueFunction f, double x) {
  switch (f) {
    case TrueFunction::Abs: return std::abs(x);
    case TrueFunction::Linear: return x;
    case TrueFunction::Sin: return std::sin(x);
    case TrueFunction::Step: return x >= 0.0 ? 1.0 : 0.0;
  }
  throw InputError("true_function: invalid enum");
}

Dataset gen_low_dim(const LowDimSpec& spec) {
  require(spec.n >= 1, "gen_low_dim: n must be at least 1");
  require(spec.e_sd >= 0.0 && spec.gd_sd >= 0.0, "gen_low_dim: noise scales must be >= 0");
  const int n = spec.n;

  Rng rz0(substream(spec.seed, kTagZ0));
  Rng rz1(substream(spec.seed, kTagZ1));
  Rng re(substream(spec.seed, kTagE));
  Rng rg(substream(spec.seed, kTagGamma));
  Rng rd(substream(spec.seed, kTagDelta));

  Dataset data;
  data.x.resize(n, 1);
  data.y.resize(n);
  data.z.resize(n, 2);
  Vector f(n);
  for (int i = 0; i < n; ++i) {
    const double z0 = rz0.uniform(-3.0, 3.0);
    const double z1 = rz1.uniform(-3.0, 3.0);
    const double e = spec.e_sd * re.normal();
    const double gamma = spec.gd_sd * rg.normal();
    const double delta = spec.gd_sd * rd.normal();
    const double x = z0 + e + gamma;
    data.z(i, 0) = z0;
    data.z(i, 1) = z1;
    data.x(i, 0) = x;
    f[i] = true_function(spec.f_star, x);
    data.y[i] = f[i] + e + delta;
  }
  data.f_star = std::move(f);
  return data;
}

LowDimPoint draw_low_dim_point(TrueFunction f_star, Rng& rng, double e_sd, double gd_sd) {
  LowDimPoint p;
  p.z[0] = rng.uniform(-3.0, 3.0);
  p.z[1] = rng.uniform(-3.0, 3.0);
  const double e = e_sd * rng.normal();
  p.x = p.z[0] + e + gd_sd * rng.normal();
  p.y = true_function(f_star, p.x) + e + gd_sd * rng.normal();
  return p;
}

Dataset gen_mendelian(const MendelianSpec& spec) {
  require(spec.d_prime >= 1, "gen_mendelian: d_prime must be at least 1");
  require(spec.n >= 1, "gen_mendelian: n must be at least 1");
  require(spec.c1 > 0.0 && spec.c2 > 0.0, "gen_mendelian: c1, c2 must be positive");
  const int n = spec.n;
  const int dp = spec.d_prime;

  // Per-dataset parameters from param_seed; shared across an experiment's
  // train/validation/test splits by passing the same param_seed.
  const std::uint64_t pseed = spec.effective_param_seed();
  Rng rp(substream(pseed, kTagMendelP));
  Rng ra(substream(pseed, kTagMendelAlpha));
  Vector p(dp), alpha(dp);
  for (int j = 0; j < dp; ++j) p[j] = rp.uniform(0.1, 0.9);
  for (int j = 0; j < dp; ++j) alpha[j] = ra.uniform(0.8 / dp, 1.2 / dp);

  std::vector<Rng> rz;
  rz.reserve(dp);
  for (int j = 0; j < dp; ++j) rz.emplace_back(substream(spec.seed, kTagMendelZBase + j));
  Rng re(substream(spec.seed, kTagE));
  Rng rg(substream(spec.seed, kTagGamma));
  Rng rd(substream(spec.seed, kTagDelta));

  Dataset data;
  data.x.resize(n, 1);
  data.y.resize(n);
  data.z.resize(n, dp);
  Vector f(n);
  for (int i = 0; i < n; ++i) {
    double zsum = 0.0;
    for (int j = 0; j < dp; ++j) {
      const double zij = static_cast<double>(rz[j].binomial(2, p[j]));
      data.z(i, j) = zij;
      zsum += alpha[j] * zij;
    }
    const double e = re.normal();
    const double x = zsum + spec.c2 * e + 0.1 * rg.normal();
    data.x(i, 0) = x;
    f[i] = spec.beta * x;
    data.y[i] = spec.beta * x + spec.c1 * e + 0.1 * rd.normal();
  }
  data.f_star = std::move(f);
  return data;
}

YTransform standardize_y(Dataset& train, const std::vector<Dataset*>& others) {
  train.validate();
  require(train.n() >= 2, "standardize_y: need at least two training rows");
  const double mean = train.y.mean();
  const double var = (train.y.array() - mean).square().mean();
  if (!(var > 0.0)) {
    throw InputError("standardize_y: training outcomes have zero variance");
  }
  const YTransform t{mean, std::sqrt(var)};
  auto apply = [&t](Dataset& d) {
    d.y = (d.y.array() - t.mean) / t.scale;
    if (d.f_star) *d.f_star = (d.f_star->array() - t.mean) / t.scale;
  };
  apply(train);
  for (Dataset* d : others) {
    if (d != nullptr) apply(*d);
  }
  return t;
}

}  // namespace mmriv
