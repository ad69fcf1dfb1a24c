#pragma once

// Test-side oracles shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kgam/neural.hpp"
#include "kgam/rng.hpp"

namespace kgam::test {

// Random scalar net with depth <= max_hidden hidden layers and width <= max_width.
inline Mlp random_net(SplitMix64& rng, int max_hidden, int max_width) {
  const int hidden = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_hidden)));
  std::vector<int> dims{1};
  for (int i = 0; i < hidden; ++i) dims.push_back(1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_width))));
  dims.push_back(1);
  Mlp net = init_mlp(dims, rng.next());
  for (auto& b : net.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.5, 0.5);
  }
  return net;
}

inline bool near_kink(const Mlp& net, double x, double margin) {
  ForwardCache cache;
  forward(net, x, &cache);
  for (std::size_t l = 0; l + 1 < cache.pre_activations.size(); ++l) {
    if ((cache.pre_activations[l].array().abs() < margin).any()) return true;
  }
  return false;
}

struct GradCheck {
  double worst_relative = 0.0;
  std::size_t parameters = 0;
};

inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

// Backprop gradient of upstream * net(x) against central differences with
// h = 1e-6 * max(1, |theta|).
inline GradCheck finite_difference_check(Mlp net, double x, double upstream) {
  ForwardCache cache;
  forward(net, x, &cache);
  const MlpGradients g = backward(net, cache, upstream);
  GradCheck out;
  auto probe = [&](double& theta, double analytic) {
    const double saved = theta;
    const double h = 1e-6 * std::max(1.0, std::abs(saved));
    theta = saved + h;
    const double up = upstream * forward(net, x);
    theta = saved - h;
    const double down = upstream * forward(net, x);
    theta = saved;
    const double numeric = (up - down) / (2 * h);
    out.worst_relative = std::max(out.worst_relative, relative_error(analytic, numeric));
    ++out.parameters;
  };
  for (std::size_t l = 0; l < net.layers(); ++l) {
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) probe(net.weights[l](r, c), g.weights[l](r, c));
    }
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) probe(net.biases[l](i), g.biases[l](i));
  }
  return out;
}

}  // namespace kgam::test
