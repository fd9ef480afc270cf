#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmriv/nn_solver.hpp"
#include "testutil.hpp"

using namespace mmriv;

namespace {

Dataset small_data(int n, std::uint64_t seed, int d = 1) {
  auto inst = testutil::random_instance(n, seed, d);
  return inst.data;
}

WeightMatrix weight_for(const Dataset& data) {
  return weight_v(gram(KernelSpec::gaussian(1.0), data.z));
}

// Flattened central finite differences over every parameter coordinate.
void check_gradient_fd(const Mlp& params, const Dataset& data, const WeightMatrix& w,
                       double lambda) {
  const double h = 1e-5;
  const ObjectiveGradient og = mlp_objective_gradient(params, data, w, lambda);
  Mlp probe = params;
  for (int l = 0; l < params.depth(); ++l) {
    for (Eigen::Index i = 0; i < params.weights[l].size(); ++i) {
      const double save = probe.weights[l](i);
      probe.weights[l](i) = save + h;
      const double up = mlp_objective_gradient(probe, data, w, lambda).objective;
      probe.weights[l](i) = save - h;
      const double dn = mlp_objective_gradient(probe, data, w, lambda).objective;
      probe.weights[l](i) = save;
      const double fd = (up - dn) / (2.0 * h);
      const double an = og.gradient.weights[l](i);
      CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-4}));
    }
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) {
      const double save = probe.biases[l][i];
      probe.biases[l][i] = save + h;
      const double up = mlp_objective_gradient(probe, data, w, lambda).objective;
      probe.biases[l][i] = save - h;
      const double dn = mlp_objective_gradient(probe, data, w, lambda).objective;
      probe.biases[l][i] = save;
      const double fd = (up - dn) / (2.0 * h);
      const double an = og.gradient.biases[l][i];
      CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-4}));
    }
  }
}

}  // namespace

TEST_CASE("forward pass closed cases") {
  // All-zero parameters produce zero output.
  Mlp zero;
  zero.layer_sizes = {2, 3, 1};
  zero.weights = {Matrix::Zero(3, 2), Matrix::Zero(1, 3)};
  zero.biases = {Vector::Zero(3), Vector::Zero(1)};
  const Matrix x = testutil::random_matrix(5, 2, 1);
  CHECK(mlp_forward(zero, x).cwiseAbs().maxCoeff() == 0.0);

  // Single linear layer: w = 2, b = 1, input 3 -> 7.
  Mlp affine;
  affine.layer_sizes = {1, 1};
  affine.weights = {Matrix::Constant(1, 1, 2.0)};
  affine.biases = {Vector::Constant(1, 1.0)};
  Matrix three(1, 1);
  three << 3.0;
  CHECK(mlp_forward(affine, three)(0) == doctest::Approx(7.0));

  // Leaky slope on a negative pre-activation: hidden(-1) = -0.01, then
  // identity output layer.
  Mlp leaky;
  leaky.layer_sizes = {1, 1, 1};
  leaky.weights = {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
  leaky.biases = {Vector::Zero(1), Vector::Zero(1)};
  Matrix neg(1, 1);
  neg << -1.0;
  CHECK(mlp_forward(leaky, neg)(0) == doctest::Approx(-0.01));
}

TEST_CASE("forward input validation") {
  const Mlp p = init_mlp({2, 4, 1}, 3);
  const Matrix wrong = testutil::random_matrix(5, 3, 1);
  CHECK_THROWS_AS(mlp_forward(p, wrong), InputError);
}

TEST_CASE("gradient matches central finite differences") {
  int points = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dataset data = small_data(8, substream(10, seed));
    const WeightMatrix w = weight_for(data);
    const Mlp params = init_mlp({1, 5, 1}, substream(20, seed));
    check_gradient_fd(params, data, w, 1e-3);
    ++points;
  }
  CHECK(points == 50);
}

TEST_CASE("zero residual leaves only the regularizer gradient") {
  Dataset data = small_data(10, 4);
  const Mlp params = init_mlp({1, 4, 1}, 5);
  data.y = mlp_forward(params, data.x);  // network memorizes y exactly
  const double lambda = 0.37;
  const ObjectiveGradient og = mlp_objective_gradient(params, data, weight_for(data), lambda);
  for (int l = 0; l < params.depth(); ++l) {
    CHECK((og.gradient.weights[l] - 2.0 * lambda * params.weights[l]).cwiseAbs().maxCoeff() <
          1e-14);
    CHECK((og.gradient.biases[l] - 2.0 * lambda * params.biases[l]).cwiseAbs().maxCoeff() <
          1e-14);
  }
}

TEST_CASE("constant-output network: output bias gradient is -2 1^T W r") {
  const Dataset data = small_data(12, 6);
  const WeightMatrix w = weight_for(data);
  Mlp constant;
  constant.layer_sizes = {1, 1};
  constant.weights = {Matrix::Zero(1, 1)};
  constant.biases = {Vector::Constant(1, 0.25)};
  const ObjectiveGradient og = mlp_objective_gradient(constant, data, w, 0.0);
  const Vector r = data.y.array() - 0.25;
  const double expected = -2.0 * (w.values * r).sum();
  CHECK(og.gradient.biases[0][0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("training descends from the initial objective") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset data = small_data(40, substream(30, seed));
    TrainConfig config;
    config.learning_rate = 1e-2;
    config.epochs = 60;
    config.lambda = 1e-4;
    config.seed = substream(40, seed);
    const TrainResult res = train_mlp(data, KernelSpec::gaussian(1.0), {8}, config);
    CHECK(res.curve.back() <= res.curve.front() + 1e-12);
    CHECK(res.curve[res.best_epoch] <= res.curve.front());
  }
}

TEST_CASE("training is deterministic per seed") {
  const Dataset data = small_data(30, 8);
  TrainConfig config;
  config.learning_rate = 5e-3;
  config.epochs = 25;
  config.lambda = 1e-4;
  config.seed = 99;
  config.optimizer = TrainConfig::Optimizer::PlainGd;
  const TrainResult a = train_mlp(data, KernelSpec::gaussian(1.0), {6}, config);
  const TrainResult b = train_mlp(data, KernelSpec::gaussian(1.0), {6}, config);
  CHECK(a.curve == b.curve);
  for (int l = 0; l < a.params.depth(); ++l) {
    CHECK((a.params.weights[l] - b.params.weights[l]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("divergence raises with the last finite state") {
  const Dataset data = small_data(20, 9);
  TrainConfig config;
  config.learning_rate = 1e6;  // guaranteed blow-up
  config.epochs = 50;
  config.lambda = 0.0;
  config.seed = 1;
  bool threw = false;
  try {
    train_mlp(data, KernelSpec::gaussian(1.0), {8}, config);
  } catch (const DivergenceError& e) {
    threw = true;
    CHECK(e.epoch >= 1);
    e.last_finite_params.validate();
  }
  CHECK(threw);
}

TEST_CASE("config validation") {
  const Dataset data = small_data(10, 11);
  TrainConfig config;
  config.epochs = 0;
  CHECK_THROWS_AS(train_mlp(data, KernelSpec::gaussian(1.0), {4}, config), InputError);
  config.epochs = 5;
  config.learning_rate = 0.0;
  CHECK_THROWS_AS(train_mlp(data, KernelSpec::gaussian(1.0), {4}, config), InputError);
}
