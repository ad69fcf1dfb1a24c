#pragma once

// Dense ReLU network for the scalar outer function g: R -> R.
//
// Layer l maps width dims[l] to dims[l+1] with W_l (dims[l+1] x dims[l]) and
// b_l; hidden layers apply ReLU, the last layer is the identity.  Batches are
// carried column-wise: activations are (width x batch).

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kgam {

enum class OptimizerKind { sgd, sgd_momentum, adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 2000;
  int batch_size = 16;
  double momentum = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 42;
  OptimizerKind optimizer = OptimizerKind::sgd;
  // Map each network's observed z range onto [-1, 1] before training.
  bool standardize_inputs = true;

  void validate() const;
  // momentum actually applied by the update rule
  double effective_momentum() const noexcept {
    return optimizer == OptimizerKind::sgd ? 0.0 : momentum;
  }
  bool operator==(const TrainConfig&) const = default;
};

struct Mlp {
  std::vector<int> dims;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  std::size_t layers() const noexcept { return weights.size(); }
  std::size_t parameter_count() const noexcept;
  bool all_finite() const;
  // Throws DataError when shapes do not chain with dims.
  void check_shapes() const;
};

bool operator==(const Mlp& a, const Mlp& b);

// Same layout as Mlp; also used for optimizer velocity.
struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static MlpGradients zeros_like(const Mlp& net);
  MlpGradients& operator+=(const MlpGradients& other);
  MlpGradients& operator*=(double s);
  bool all_finite() const;
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;      // [0] = input row, then post-ReLU per hidden layer
  std::vector<Eigen::MatrixXd> pre_activations;  // one per layer
  Eigen::Index batch() const { return activations.empty() ? 0 : activations.front().cols(); }
};

void validate_dims(std::span<const int> dims);

// [1, width x hidden_layers, 1]
std::vector<int> scalar_mlp_dims(int hidden_width, int hidden_layers);

Mlp zero_mlp(std::span<const int> dims);

// He-uniform: W ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), b = 0.
Mlp init_mlp(std::span<const int> dims, std::uint64_t seed);

double forward(const Mlp& net, double x, ForwardCache* cache = nullptr);
Eigen::RowVectorXd forward_batch(const Mlp& net, std::span<const double> xs,
                                 ForwardCache* cache = nullptr);

// Gradient of upstream * out w.r.t. every parameter.  ReLU'(0) = 0.
MlpGradients backward(const Mlp& net, const ForwardCache& cache, double upstream);
// Sum over the batch of upstream[j] * d out_j / d theta.
MlpGradients backward_batch(const Mlp& net, const ForwardCache& cache,
                            std::span<const double> upstream);

// v <- mu v + g;  theta <- theta - lr v.  With mu = 0 this is plain SGD.
// Throws DivergenceError (epoch -1) on a non-finite gradient.
void sgd_step(Mlp& net, const MlpGradients& grads, const TrainConfig& config,
              MlpGradients& velocity);
void sgd_step(double& theta, double grad, const TrainConfig& config, double& velocity);

// Adam moment estimates for one network (or one scalar).
struct AdamState {
  MlpGradients first;
  MlpGradients second;
  long step = 0;
};
struct ScalarAdamState {
  double first = 0.0;
  double second = 0.0;
  long step = 0;
};

// Bias-corrected Adam update.  Same divergence contract as sgd_step.
void adam_step(Mlp& net, const MlpGradients& grads, const TrainConfig& config, AdamState& state);
void adam_step(double& theta, double grad, const TrainConfig& config, ScalarAdamState& state);

}  // namespace kgam
