#include "kgam/neural.hpp"

#include <cmath>

#include "kgam/errors.hpp"
#include "kgam/rng.hpp"

namespace kgam {

namespace {

constexpr std::uint64_t kInitStream = 1;

}  // namespace

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::sgd_momentum: return "sgd_momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "sgd_momentum") return OptimizerKind::sgd_momentum;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) ||
      !(adam_epsilon > 0.0)) {
    throw ConfigError("Adam betas must lie in [0, 1) and epsilon must be positive");
  }
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

bool Mlp::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

void Mlp::check_shapes() const {
  validate_dims(dims);
  if (weights.size() != dims.size() - 1 || biases.size() != dims.size() - 1) {
    throw DataError("network has " + std::to_string(weights.size()) + " layers, dims imply " +
                    std::to_string(dims.size() - 1));
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != dims[l + 1] || weights[l].cols() != dims[l] ||
        biases[l].size() != dims[l + 1]) {
      throw DataError("layer " + std::to_string(l) + " shape does not match dims");
    }
  }
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.dims != b.dims || a.weights.size() != b.weights.size()) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
  }
  return true;
}

MlpGradients MlpGradients::zeros_like(const Mlp& net) {
  MlpGradients g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return g;
}

MlpGradients& MlpGradients::operator+=(const MlpGradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

MlpGradients& MlpGradients::operator*=(double s) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= s;
    biases[l] *= s;
  }
  return *this;
}

bool MlpGradients::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

void validate_dims(std::span<const int> dims) {
  if (dims.size() < 2) throw ConfigError("network needs at least input and output widths");
  if (dims.front() != 1 || dims.back() != 1) {
    throw ConfigError("outer network must map a scalar to a scalar (dims start and end with 1)");
  }
  for (int w : dims) {
    if (w < 1) throw ConfigError("layer widths must be >= 1");
  }
}

std::vector<int> scalar_mlp_dims(int hidden_width, int hidden_layers) {
  if (hidden_width < 1 || hidden_layers < 0) throw ConfigError("invalid hidden layer spec");
  std::vector<int> dims{1};
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_width);
  dims.push_back(1);
  return dims;
}

Mlp zero_mlp(std::span<const int> dims) {
  validate_dims(dims);
  Mlp net;
  net.dims.assign(dims.begin(), dims.end());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    net.weights.push_back(Eigen::MatrixXd::Zero(dims[l + 1], dims[l]));
    net.biases.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  return net;
}

Mlp init_mlp(std::span<const int> dims, std::uint64_t seed) {
  Mlp net = zero_mlp(dims);
  SplitMix64 rng = derive_stream(seed, kInitStream);
  for (auto& w : net.weights) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    // row-major fill order so other implementations can reproduce it
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
  }
  return net;
}

Eigen::RowVectorXd forward_batch(const Mlp& net, std::span<const double> xs, ForwardCache* cache) {
  Eigen::MatrixXd a = Eigen::Map<const Eigen::RowVectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  if (cache != nullptr) {
    cache->activations.clear();
    cache->pre_activations.clear();
    cache->activations.push_back(a);
  }
  const std::size_t last = net.layers() - 1;
  for (std::size_t l = 0; l < net.layers(); ++l) {
    Eigen::MatrixXd z = net.weights[l] * a;
    z.colwise() += net.biases[l];
    if (l == last) {
      if (cache != nullptr) cache->pre_activations.push_back(z);
      a = std::move(z);
      break;
    }
    a = z.cwiseMax(0.0);
    if (cache != nullptr) {
      cache->pre_activations.push_back(std::move(z));
      cache->activations.push_back(a);
    }
  }
  return a.row(0);
}

double forward(const Mlp& net, double x, ForwardCache* cache) {
  return forward_batch(net, std::span<const double>(&x, 1), cache)(0);
}

MlpGradients backward_batch(const Mlp& net, const ForwardCache& cache,
                            std::span<const double> upstream) {
  if (cache.pre_activations.size() != net.layers() ||
      cache.activations.size() != net.layers() ||
      static_cast<std::size_t>(cache.batch()) != upstream.size()) {
    throw DataError("forward cache does not match network or upstream gradient");
  }
  for (std::size_t l = 0; l < net.layers(); ++l) {
    if (cache.pre_activations[l].rows() != net.weights[l].rows() ||
        cache.activations[l].rows() != net.weights[l].cols()) {
      throw DataError("forward cache does not match network or upstream gradient");
    }
  }
  MlpGradients g;
  g.weights.resize(net.layers());
  g.biases.resize(net.layers());
  // delta = d out / d pre-activation of the current layer
  Eigen::MatrixXd delta =
      Eigen::Map<const Eigen::RowVectorXd>(upstream.data(), static_cast<Eigen::Index>(upstream.size()));
  for (std::size_t l = net.layers(); l-- > 0;) {
    g.weights[l] = delta * cache.activations[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = net.weights[l].transpose() * delta;
    const auto& z = cache.pre_activations[l - 1];
    delta = back.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
  }
  return g;
}

MlpGradients backward(const Mlp& net, const ForwardCache& cache, double upstream) {
  return backward_batch(net, cache, std::span<const double>(&upstream, 1));
}

void sgd_step(Mlp& net, const MlpGradients& grads, const TrainConfig& config,
              MlpGradients& velocity) {
  if (grads.weights.size() != net.layers()) throw DataError("gradient shape mismatch");
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient", -1);
  if (velocity.weights.empty()) velocity = MlpGradients::zeros_like(net);
  const double mu = config.effective_momentum();
  const double lr = config.learning_rate;
  for (std::size_t l = 0; l < net.layers(); ++l) {
    if (grads.weights[l].rows() != net.weights[l].rows() ||
        grads.weights[l].cols() != net.weights[l].cols()) {
      throw DataError("gradient shape mismatch at layer " + std::to_string(l));
    }
    velocity.weights[l] = mu * velocity.weights[l] + grads.weights[l];
    velocity.biases[l] = mu * velocity.biases[l] + grads.biases[l];
    net.weights[l] -= lr * velocity.weights[l];
    net.biases[l] -= lr * velocity.biases[l];
  }
}

void sgd_step(double& theta, double grad, const TrainConfig& config, double& velocity) {
  if (!std::isfinite(grad)) throw DivergenceError("non-finite gradient", -1);
  velocity = config.effective_momentum() * velocity + grad;
  theta -= config.learning_rate * velocity;
}

void adam_step(Mlp& net, const MlpGradients& grads, const TrainConfig& config, AdamState& state) {
  if (grads.weights.size() != net.layers()) throw DataError("gradient shape mismatch");
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient", -1);
  if (state.first.weights.empty()) {
    state.first = MlpGradients::zeros_like(net);
    state.second = MlpGradients::zeros_like(net);
  }
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = config.learning_rate;
  const double eps = config.adam_epsilon;
  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.layers(); ++l) {
    if (grads.weights[l].rows() != net.weights[l].rows() ||
        grads.weights[l].cols() != net.weights[l].cols()) {
      throw DataError("gradient shape mismatch at layer " + std::to_string(l));
    }
    update(net.weights[l], grads.weights[l], state.first.weights[l], state.second.weights[l]);
    update(net.biases[l], grads.biases[l], state.first.biases[l], state.second.biases[l]);
  }
}

void adam_step(double& theta, double grad, const TrainConfig& config, ScalarAdamState& state) {
  if (!std::isfinite(grad)) throw DivergenceError("non-finite gradient", -1);
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  state.first = b1 * state.first + (1.0 - b1) * grad;
  state.second = b2 * state.second + (1.0 - b2) * grad * grad;
  const double mhat = state.first / (1.0 - std::pow(b1, static_cast<double>(state.step)));
  const double vhat = state.second / (1.0 - std::pow(b2, static_cast<double>(state.step)));
  theta -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_epsilon);
}

}  // namespace kgam
