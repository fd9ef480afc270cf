#include "mmriv/nn_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mmriv/rng.hpp"

namespace mmriv {

void Mlp::validate() const {
  require(layer_sizes.size() >= 2, "Mlp: need at least input and output layers");
  require(weights.size() == layer_sizes.size() - 1 && biases.size() == weights.size(),
          "Mlp: layer count mismatch");
  for (size_t l = 0; l < weights.size(); ++l) {
    require(weights[l].rows() == layer_sizes[l + 1] && weights[l].cols() == layer_sizes[l],
            "Mlp: weight shape inconsistent with layer sizes");
    require(biases[l].size() == layer_sizes[l + 1], "Mlp: bias shape inconsistent");
    require(weights[l].allFinite() && biases[l].allFinite(), "Mlp: non-finite parameters");
  }
  require(layer_sizes.back() == 1, "Mlp: output layer must be scalar");
}

double Mlp::squared_param_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

Mlp init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed, double leaky_slope) {
  require(layer_sizes.size() >= 2, "init_mlp: need at least input and output layers");
  for (int s : layer_sizes) require(s >= 1, "init_mlp: layer sizes must be positive");
  Mlp p;
  p.layer_sizes = layer_sizes;
  p.leaky_slope = leaky_slope;
  Rng rng(seed);
  for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i) {
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-a, a);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(fan_out));
  }
  p.validate();
  return p;
}

Mlp zeros_like(const Mlp& params) {
  Mlp z;
  z.layer_sizes = params.layer_sizes;
  z.leaky_slope = params.leaky_slope;
  for (const auto& w : params.weights) z.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : params.biases) z.biases.push_back(Vector::Zero(b.size()));
  return z;
}

namespace {

// Activations per layer for the batch; pre[l] holds the pre-activation of
// layer l+1, post[l] its leaky-ReLU output (identity on the last layer).
struct ForwardTrace {
  std::vector<Matrix> pre;   // batch x fan_out
  std::vector<Matrix> post;  // batch x fan_out
};

ForwardTrace forward_trace(const Mlp& p, const Eigen::Ref<const Matrix>& x) {
  p.validate();
  require(x.cols() == p.layer_sizes.front(),
          "mlp_forward: input dimension does not match first layer");
  ForwardTrace t;
  Matrix h = x;
  const int depth = p.depth();
  for (int l = 0; l < depth; ++l) {
    Matrix z = (h * p.weights[l].transpose()).rowwise() + p.biases[l].transpose();
    t.pre.push_back(z);
    if (l + 1 < depth) {
      t.post.push_back(z.unaryExpr(
          [s = p.leaky_slope](double v) { return v >= 0.0 ? v : s * v; }));
      h = t.post.back();
    } else {
      t.post.push_back(z);  // linear output
      h = t.post.back();
    }
  }
  return t;
}

}  // namespace

Vector mlp_forward(const Mlp& params, const Eigen::Ref<const Matrix>& x) {
  return forward_trace(params, x).post.back().col(0);
}

ObjectiveGradient mlp_objective_gradient(const Mlp& params, const Dataset& data,
                                         const WeightMatrix& w_v, double lambda) {
  data.validate();
  require(w_v.n() == data.n(), "mlp_objective_gradient: weight matrix size mismatch");
  require(lambda >= 0.0, "mlp_objective_gradient: lambda must be non-negative");

  const ForwardTrace trace = forward_trace(params, data.x);
  const Vector f = trace.post.back().col(0);
  const Vector r = data.y - f;
  const Vector wr = w_v.values * r;
  const double objective = r.dot(wr) + lambda * params.squared_param_norm();
  if (!std::isfinite(objective)) {
    throw NumericalError("mlp_objective_gradient: non-finite objective");
  }

  ObjectiveGradient out{objective, zeros_like(params)};
  const int depth = params.depth();

  // d obj / d f = -2 W_V r; backpropagate through the linear output and
  // leaky-ReLU layers.
  Matrix delta = (-2.0 * wr);  // batch x 1
  for (int l = depth - 1; l >= 0; --l) {
    const Matrix& input = (l == 0) ? data.x : trace.post[l - 1];
    out.gradient.weights[l] = delta.transpose() * input;
    out.gradient.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix up = delta * params.weights[l];  // batch x fan_in(l)
      const Matrix& pre = trace.pre[l - 1];
      delta = up.binaryExpr(pre, [s = params.leaky_slope](double g, double z) {
        return z >= 0.0 ? g : s * g;
      });
    }
  }
  for (int l = 0; l < depth; ++l) {
    out.gradient.weights[l] += 2.0 * lambda * params.weights[l];
    out.gradient.biases[l] += 2.0 * lambda * params.biases[l];
  }
  return out;
}

TrainResult train_mlp_with(const Dataset& data, const WeightMatrix& w_v,
                           const std::vector<int>& hidden_sizes, const TrainConfig& config) {
  require(config.epochs >= 1, "train_mlp: epochs must be at least 1");
  require(config.learning_rate > 0.0, "train_mlp: learning rate must be positive");
  require(config.lambda >= 0.0, "train_mlp: lambda must be non-negative");

  std::vector<int> sizes;
  sizes.push_back(data.d());
  for (int h : hidden_sizes) sizes.push_back(h);
  sizes.push_back(1);

  Mlp params = init_mlp(sizes, config.seed);
  Mlp velocity = zeros_like(params);

  TrainResult result{params, {}, 0};
  double best = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    ObjectiveGradient og = [&]() {
      try {
        return mlp_objective_gradient(params, data, w_v, config.lambda);
      } catch (const NumericalError&) {
        std::ostringstream os;
        os << "train_mlp: diverged (non-finite objective) at epoch " << epoch;
        throw DivergenceError(os.str(), result.params, epoch);
      }
    }();
    if (epoch > 0 && og.objective > 10.0 * prev + 1e-30) {
      std::ostringstream os;
      os << "train_mlp: diverged (objective grew >10x, " << prev << " -> " << og.objective
         << ") at epoch " << epoch;
      throw DivergenceError(os.str(), result.params, epoch);
    }
    result.curve.push_back(og.objective);
    if (og.objective < best) {
      best = og.objective;
      result.params = params;
      result.best_epoch = epoch;
    }
    prev = og.objective;
    if (epoch == config.epochs) break;

    const double lr = config.learning_rate;
    if (config.optimizer == TrainConfig::Optimizer::Momentum) {
      for (int l = 0; l < params.depth(); ++l) {
        velocity.weights[l] = config.momentum * velocity.weights[l] - lr * og.gradient.weights[l];
        velocity.biases[l] = config.momentum * velocity.biases[l] - lr * og.gradient.biases[l];
        params.weights[l] += velocity.weights[l];
        params.biases[l] += velocity.biases[l];
      }
    } else {
      for (int l = 0; l < params.depth(); ++l) {
        params.weights[l] -= lr * og.gradient.weights[l];
        params.biases[l] -= lr * og.gradient.biases[l];
      }
    }
  }
  return result;
}

TrainResult train_mlp(const Dataset& data, const KernelSpec& kernel_k,
                      const std::vector<int>& hidden_sizes, const TrainConfig& config) {
  data.validate();
  const GramMatrix K = gram(kernel_k, data.z, "z");
  return train_mlp_with(data, weight_v(K), hidden_sizes, config);
}

}  // namespace mmriv
