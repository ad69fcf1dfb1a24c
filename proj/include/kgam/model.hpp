#pragma once

// Additive model over the fixed embedding:
//
//   regression:      f(x) = sum_q g_q(z_q)
//   classification:  P(y = 1 | x) = sigmoid(beta_0 + sum_q g_q(z_q))
//
// g_q is one shared network (shared_g), one network per channel
// (per_channel_g), or a single network on the B-adic channel
// (badic_single_g).  Training touches the networks and beta_0; the input
// scaling of each network is fixed from the training z ranges before the
// first step.

#include <Eigen/Core>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgam/datasets.hpp"
#include "kgam/embedding.hpp"
#include "kgam/koppen.hpp"
#include "kgam/neural.hpp"

namespace kgam {

enum class OuterMode { shared_g, per_channel_g, badic_single_g };
enum class Task { regression, binary_classification };
enum class LossKind { l2, logistic };

std::string to_string(OuterMode m);
std::string to_string(Task t);
std::string to_string(LossKind k);
OuterMode parse_outer_mode(const std::string& s);
Task parse_task(const std::string& s);
LossKind parse_loss(const std::string& s);
LossKind default_loss(Task t);

struct Loss {
  LossKind kind = LossKind::l2;
  double value = 0.0;
};

struct ChannelRange {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const ChannelRange&) const = default;
};

// Fixed affine map applied to z before an outer network: u = (z - shift) * scale.
struct InputScaling {
  double shift = 0.0;
  double scale = 1.0;
  double operator()(double z) const noexcept { return (z - shift) * scale; }
  bool operator==(const InputScaling&) const = default;
};

struct KgamModel {
  KstParams params;
  Normalizer normalizer;
  OuterMode outer_mode = OuterMode::shared_g;
  int badic_base = 10;
  std::vector<Mlp> nets;
  double intercept = 0.0;
  Task task = Task::regression;
  // Observed z range per embedding channel, recorded by train().
  std::vector<ChannelRange> channel_ranges;
  // One per network; empty means identity.  Set by train() when
  // TrainConfig::standardize_inputs is on, then frozen.
  std::vector<InputScaling> input_scaling;

  // Embedding channels fed to the outer networks: 1 for B-adic, else 2d+1.
  int channels() const noexcept {
    return outer_mode == OuterMode::badic_single_g ? 1 : params.channels();
  }
  std::size_t slot_for(int channel) const noexcept {
    return outer_mode == OuterMode::per_channel_g ? static_cast<std::size_t>(channel) : 0;
  }
  const Mlp& net_for(int channel) const { return nets[slot_for(channel)]; }
  InputScaling scaling_for(int channel) const {
    return input_scaling.empty() ? InputScaling{} : input_scaling[slot_for(channel)];
  }
  void validate() const;
};

// Fresh model with He-initialised outer networks.
KgamModel make_model(const KstParams& params, const Normalizer& normalizer, OuterMode mode,
                     Task task, std::span<const int> dims, std::uint64_t seed,
                     int badic_base = 10);

// rows x channels() embedding of raw feature rows.
Eigen::MatrixXd embed_rows(const KgamModel& model, const Eigen::MatrixXd& raw);

// g_q(z_q) for every channel of one embedded row.
std::vector<double> channel_contributions(const KgamModel& model, std::span<const double> z);

// g_q at arbitrary points z, including the network's input scaling.
Eigen::RowVectorXd outer_eval(const KgamModel& model, int channel, std::span<const double> z,
                              ForwardCache* cache = nullptr);

// Additive score sum_q g_q(z_q) (+ beta_0 for classification) per embedded row.
Eigen::VectorXd score_embedded(const KgamModel& model, const Eigen::MatrixXd& z);

// Regression value or class-1 probability.
double predict(const KgamModel& model, std::span<const double> raw);
Eigen::VectorXd predict_batch(const KgamModel& model, const Eigen::MatrixXd& raw);

Loss loss_value(LossKind kind, const Eigen::VectorXd& scores, const Eigen::VectorXd& y);

struct TrainResult {
  std::vector<double> loss_trace;  // full training-set loss after each epoch
  double initial_loss = 0.0;
};

// Mini-batch gradient descent (SGD, momentum or Adam) over dataset.train_idx,
// reshuffled each epoch.
// Throws DivergenceError carrying the epoch index on a non-finite loss.
TrainResult train(KgamModel& model, const Dataset& data, const TrainConfig& config,
                  LossKind loss);

struct Metrics {
  Task task = Task::regression;
  std::size_t n = 0;
  double rmse = 0.0;
  double r2 = 0.0;        // regression only
  double accuracy = 0.0;  // classification only
  // confusion[actual][predicted], threshold 0.5
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  double loss = 0.0;
};

Metrics metrics_from_predictions(Task task, const Eigen::VectorXd& predicted,
                                 const Eigen::VectorXd& actual);
Metrics evaluate(const KgamModel& model, const Dataset& data, std::span<const std::size_t> idx);

nlohmann::json metrics_to_json(const Metrics& m);
std::string confusion_table(const Metrics& m);

struct OuterSample {
  double z;
  double g;
};

// Samples one outer network over the recorded z range of a channel; with no
// channel, the shared network over the union of all ranges.
std::vector<OuterSample> outer_function_series(const KgamModel& model, std::optional<int> channel,
                                               int grid_points);

}  // namespace kgam
