#pragma once

#include <vector>

#include "mmriv/risk.hpp"

namespace mmriv {

/// Fully connected network with leaky-ReLU hidden activations and a linear
/// scalar output. weights[l] maps layer l to layer l+1
/// (rows = fan_out, cols = fan_in).
struct Mlp {
  std::vector<int> layer_sizes;  // e.g. {d, 100, 100, 1}
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  double leaky_slope = 0.01;

  int depth() const { return static_cast<int>(weights.size()); }
  void validate() const;
  /// Sum of squared entries over all weights and biases.
  double squared_param_norm() const;
};

/// Glorot-uniform weights, a = sqrt(6 / (fan_in + fan_out)); zero biases.
Mlp init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed,
             double leaky_slope = 0.01);

Mlp zeros_like(const Mlp& params);

/// Batch forward pass; x is batch x d.
Vector mlp_forward(const Mlp& params, const Eigen::Ref<const Matrix>& x);

struct ObjectiveGradient {
  double objective;
  Mlp gradient;
};

/// Objective r^T W_V r + lambda |theta|_2^2 with r = y - f(x) and its
/// gradient: reverse-mode pass seeded with the output cotangent -2 W_V r,
/// plus 2 lambda theta.
ObjectiveGradient mlp_objective_gradient(const Mlp& params, const Dataset& data,
                                         const WeightMatrix& w_v, double lambda);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 100;
  double lambda = 1e-4;
  std::uint64_t seed = 0;
  enum class Optimizer { PlainGd, Momentum } optimizer = Optimizer::Momentum;
  double momentum = 0.9;
};

struct TrainResult {
  Mlp params;                 // parameters of the lowest-objective epoch
  std::vector<double> curve;  // objective at init, then after each epoch
  int best_epoch = 0;         // index into curve
};

/// Thrown on non-finite objective or a >10x single-epoch blow-up; carries
/// the last finite parameters for inspection.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& msg, Mlp last_finite, int epoch)
      : NumericalError(msg), last_finite_params(std::move(last_finite)), epoch(epoch) {}
  Mlp last_finite_params;
  int epoch;
};

/// Full-batch gradient descent on the V-statistic objective. The weight
/// matrix couples every sample pair, so there is no mini-batching.
TrainResult train_mlp(const Dataset& data, const KernelSpec& kernel_k,
                      const std::vector<int>& hidden_sizes, const TrainConfig& config);

/// As above with a precomputed weight matrix.
TrainResult train_mlp_with(const Dataset& data, const WeightMatrix& w_v,
                           const std::vector<int>& hidden_sizes, const TrainConfig& config);

}  // namespace mmriv
