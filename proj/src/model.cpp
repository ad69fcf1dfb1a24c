#include "kgam/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "kgam/errors.hpp"
#include "kgam/rng.hpp"

namespace kgam {

namespace {

constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kNetSeedStream = 100;

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

}  // namespace

std::string to_string(OuterMode m) {
  switch (m) {
    case OuterMode::shared_g: return "shared_g";
    case OuterMode::per_channel_g: return "per_channel_g";
    case OuterMode::badic_single_g: return "badic_single_g";
  }
  return "?";
}

std::string to_string(Task t) {
  return t == Task::regression ? "regression" : "binary_classification";
}

std::string to_string(LossKind k) { return k == LossKind::l2 ? "l2" : "logistic"; }

OuterMode parse_outer_mode(const std::string& s) {
  if (s == "shared_g") return OuterMode::shared_g;
  if (s == "per_channel_g") return OuterMode::per_channel_g;
  if (s == "badic_single_g") return OuterMode::badic_single_g;
  throw ConfigError("unknown outer mode '" + s + "'");
}

Task parse_task(const std::string& s) {
  if (s == "regression") return Task::regression;
  if (s == "binary_classification" || s == "classification") return Task::binary_classification;
  throw ConfigError("unknown task '" + s + "'");
}

LossKind parse_loss(const std::string& s) {
  if (s == "l2") return LossKind::l2;
  if (s == "logistic") return LossKind::logistic;
  throw ConfigError("unknown loss '" + s + "'");
}

LossKind default_loss(Task t) { return t == Task::regression ? LossKind::l2 : LossKind::logistic; }

void KgamModel::validate() const {
  params.validate();
  const std::size_t expected =
      outer_mode == OuterMode::per_channel_g ? static_cast<std::size_t>(params.channels()) : 1;
  if (nets.size() != expected) {
    throw DataError(to_string(outer_mode) + " needs " + std::to_string(expected) +
                    " outer network(s), model has " + std::to_string(nets.size()));
  }
  for (const auto& net : nets) net.check_shapes();
  if (normalizer.features() != static_cast<std::size_t>(params.d)) {
    throw DataError("normalizer feature count differs from d");
  }
  if (outer_mode == OuterMode::badic_single_g && badic_base < 2) {
    throw ConfigError("B-adic mode needs base >= 2");
  }
  if (!channel_ranges.empty() && channel_ranges.size() != static_cast<std::size_t>(channels())) {
    throw DataError("channel range count differs from channel count");
  }
  if (!input_scaling.empty()) {
    if (input_scaling.size() != nets.size()) {
      throw DataError("input scaling count differs from network count");
    }
    for (const auto& s : input_scaling) {
      if (!std::isfinite(s.shift) || !std::isfinite(s.scale) || !(s.scale > 0.0)) {
        throw DataError("input scaling must be finite with positive scale");
      }
    }
  }
}

KgamModel make_model(const KstParams& params, const Normalizer& normalizer, OuterMode mode,
                     Task task, std::span<const int> dims, std::uint64_t seed, int badic_base) {
  KgamModel m;
  m.params = params;
  m.normalizer = normalizer;
  m.outer_mode = mode;
  m.task = task;
  m.badic_base = badic_base;
  const int count = mode == OuterMode::per_channel_g ? params.channels() : 1;
  for (int q = 0; q < count; ++q) {
    const std::uint64_t net_seed =
        derive_stream(seed, kNetSeedStream + static_cast<std::uint64_t>(q)).next();
    m.nets.push_back(init_mlp(dims, net_seed));
  }
  m.validate();
  return m;
}

Eigen::MatrixXd embed_rows(const KgamModel& model, const Eigen::MatrixXd& raw) {
  if (model.outer_mode == OuterMode::badic_single_g) {
    return badic_embed_batch(raw, model.normalizer, model.params, model.badic_base);
  }
  return embed_batch(raw, model.normalizer, model.params);
}

Eigen::RowVectorXd outer_eval(const KgamModel& model, int channel, std::span<const double> z,
                              ForwardCache* cache) {
  if (channel < 0 || channel >= model.channels()) {
    throw ConfigError("channel " + std::to_string(channel) + " out of range [0, " +
                      std::to_string(model.channels() - 1) + "]");
  }
  const InputScaling s = model.scaling_for(channel);
  std::vector<double> u(z.size());
  std::transform(z.begin(), z.end(), u.begin(), s);
  return forward_batch(model.net_for(channel), u, cache);
}

std::vector<double> channel_contributions(const KgamModel& model, std::span<const double> z) {
  if (static_cast<int>(z.size()) != model.channels()) throw DataError("embedding width mismatch");
  std::vector<double> out(z.size());
  for (std::size_t q = 0; q < z.size(); ++q) {
    out[q] = outer_eval(model, static_cast<int>(q), z.subspan(q, 1))(0);
  }
  return out;
}

Eigen::VectorXd score_embedded(const KgamModel& model, const Eigen::MatrixXd& z) {
  if (z.cols() != model.channels()) throw DataError("embedding width mismatch");
  Eigen::VectorXd score = Eigen::VectorXd::Constant(
      z.rows(), model.task == Task::binary_classification ? model.intercept : 0.0);
  if (z.rows() == 0) return score;
  if (model.outer_mode == OuterMode::per_channel_g) {
    for (Eigen::Index q = 0; q < z.cols(); ++q) {
      const Eigen::VectorXd column = z.col(q);
      score += outer_eval(model, static_cast<int>(q),
                          std::span<const double>(column.data(), static_cast<std::size_t>(column.size())))
                   .transpose();
    }
    return score;
  }
  // One network: evaluate every (row, channel) pair in a single batch,
  // laid out row-major so each row's channels are contiguous.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> flat = z;
  const Eigen::RowVectorXd g =
      outer_eval(model, 0, std::span<const double>(flat.data(), static_cast<std::size_t>(flat.size())));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index q = 0; q < z.cols(); ++q) s += g(i * z.cols() + q);
    score(i) += s;
  }
  return score;
}

double predict(const KgamModel& model, std::span<const double> raw) {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(raw.size()));
  for (std::size_t j = 0; j < raw.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = raw[j];
  return predict_batch(model, row)(0);
}

Eigen::VectorXd predict_batch(const KgamModel& model, const Eigen::MatrixXd& raw) {
  Eigen::VectorXd s = score_embedded(model, embed_rows(model, raw));
  if (model.task == Task::binary_classification) s = s.unaryExpr(&sigmoid);
  return s;
}

Loss loss_value(LossKind kind, const Eigen::VectorXd& scores, const Eigen::VectorXd& y) {
  if (scores.size() != y.size() || y.size() == 0) throw DataError("loss needs matching, non-empty vectors");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (kind == LossKind::l2) {
      const double r = scores(i) - y(i);
      total += r * r;
    } else {
      total += softplus(scores(i)) - y(i) * scores(i);
    }
  }
  return {kind, total / static_cast<double>(y.size())};
}

TrainResult train(KgamModel& model, const Dataset& data, const TrainConfig& config,
                  LossKind loss) {
  config.validate();
  model.validate();
  if ((loss == LossKind::logistic) != (model.task == Task::binary_classification)) {
    throw ConfigError("loss " + to_string(loss) + " does not match task " + to_string(model.task));
  }
  if (data.features() != static_cast<std::size_t>(model.params.d)) {
    throw DataError("dataset has " + std::to_string(data.features()) + " features, model expects " +
                    std::to_string(model.params.d));
  }
  if (data.train_idx.empty()) throw DataError("no training rows");
  if (loss == LossKind::logistic) {
    for (auto i : data.train_idx) {
      const double v = data.y(static_cast<Eigen::Index>(i));
      if (v != 0.0 && v != 1.0) throw DataError("logistic loss needs 0/1 targets");
    }
  }

  const Eigen::MatrixXd z = embed_rows(model, data.features_of(data.train_idx));
  const Eigen::VectorXd y = data.targets_of(data.train_idx);
  const auto n = static_cast<std::size_t>(z.rows());
  const auto channels = static_cast<std::size_t>(z.cols());

  model.channel_ranges.resize(channels);
  for (std::size_t q = 0; q < channels; ++q) {
    model.channel_ranges[q] = {z.col(static_cast<Eigen::Index>(q)).minCoeff(),
                               z.col(static_cast<Eigen::Index>(q)).maxCoeff()};
  }
  const bool shared = model.outer_mode != OuterMode::per_channel_g;
  model.input_scaling.clear();
  if (config.standardize_inputs) {
    auto fit = [](ChannelRange r) {
      const double half = 0.5 * (r.hi - r.lo);
      return half > 0.0 ? InputScaling{r.lo + half, 1.0 / half} : InputScaling{r.lo, 1.0};
    };
    if (shared) {
      ChannelRange all = model.channel_ranges.front();
      for (const auto& r : model.channel_ranges) {
        all.lo = std::min(all.lo, r.lo);
        all.hi = std::max(all.hi, r.hi);
      }
      model.input_scaling.push_back(fit(all));
    } else {
      for (const auto& r : model.channel_ranges) model.input_scaling.push_back(fit(r));
    }
  }
  // network inputs after scaling
  Eigen::MatrixXd u = z;
  for (Eigen::Index q = 0; q < u.cols(); ++q) {
    u.col(q) = u.col(q).unaryExpr(model.scaling_for(static_cast<int>(q)));
  }

  TrainResult result;
  result.initial_loss = loss_value(loss, score_embedded(model, z), y).value;
  if (config.epochs == 0) return result;

  const bool classify = model.task == Task::binary_classification;
  std::vector<MlpGradients> velocity(model.nets.size());
  std::vector<AdamState> adam(model.nets.size());
  double intercept_velocity = 0.0;
  ScalarAdamState intercept_adam;
  const bool use_adam = config.optimizer == OptimizerKind::adam;
  auto step_net = [&](std::size_t slot, const MlpGradients& grads) {
    if (use_adam) {
      adam_step(model.nets[slot], grads, config, adam[slot]);
    } else {
      sgd_step(model.nets[slot], grads, config, velocity[slot]);
    }
  };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng = derive_stream(config.seed, kShuffleStream);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  std::vector<double> inputs;
  std::vector<double> upstream;
  std::vector<double> dscore;
  ForwardCache cache;
  std::vector<ForwardCache> channel_cache(shared ? 0 : channels);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    try {
      for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        const std::size_t b = stop - start;
        std::vector<double> score(b, classify ? model.intercept : 0.0);

        if (shared) {
          inputs.resize(b * channels);
          for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t q = 0; q < channels; ++q) {
              inputs[i * channels + q] = u(static_cast<Eigen::Index>(order[start + i]),
                                           static_cast<Eigen::Index>(q));
            }
          }
          const Eigen::RowVectorXd g = forward_batch(model.nets.front(), inputs, &cache);
          for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t q = 0; q < channels; ++q) score[i] += g(static_cast<Eigen::Index>(i * channels + q));
          }
        } else {
          inputs.resize(b);
          for (std::size_t q = 0; q < channels; ++q) {
            for (std::size_t i = 0; i < b; ++i) {
              inputs[i] = u(static_cast<Eigen::Index>(order[start + i]), static_cast<Eigen::Index>(q));
            }
            const Eigen::RowVectorXd g = forward_batch(model.nets[q], inputs, &channel_cache[q]);
            for (std::size_t i = 0; i < b; ++i) score[i] += g(static_cast<Eigen::Index>(i));
          }
        }

        // d(batch mean loss) / d score
        dscore.assign(b, 0.0);
        double dintercept = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
          const double target = y(static_cast<Eigen::Index>(order[start + i]));
          dscore[i] = loss == LossKind::l2 ? 2.0 * (score[i] - target) / static_cast<double>(b)
                                           : (sigmoid(score[i]) - target) / static_cast<double>(b);
          dintercept += dscore[i];
        }

        if (shared) {
          upstream.resize(b * channels);
          for (std::size_t i = 0; i < b; ++i) {
            std::fill_n(upstream.begin() + static_cast<std::ptrdiff_t>(i * channels), channels, dscore[i]);
          }
          step_net(0, backward_batch(model.nets.front(), cache, upstream));
        } else {
          for (std::size_t q = 0; q < channels; ++q) {
            step_net(q, backward_batch(model.nets[q], channel_cache[q], dscore));
          }
        }
        if (classify) {
          if (use_adam) {
            adam_step(model.intercept, dintercept, config, intercept_adam);
          } else {
            sgd_step(model.intercept, dintercept, config, intercept_velocity);
          }
        }
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch), epoch);
    }
    const double epoch_loss = loss_value(loss, score_embedded(model, z), y).value;
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("training diverged (non-finite loss) at epoch " + std::to_string(epoch),
                            epoch);
    }
    result.loss_trace.push_back(epoch_loss);
  }
  return result;
}

Metrics metrics_from_predictions(Task task, const Eigen::VectorXd& predicted,
                                 const Eigen::VectorXd& actual) {
  if (predicted.size() == 0) throw DataError("cannot evaluate an empty split");
  if (predicted.size() != actual.size()) throw DataError("prediction/target length mismatch");
  Metrics m;
  m.task = task;
  m.n = static_cast<std::size_t>(actual.size());
  m.rmse = std::sqrt((predicted - actual).squaredNorm() / static_cast<double>(m.n));
  if (task == Task::regression) {
    const double sst = (actual.array() - actual.mean()).square().sum();
    const double sse = (predicted - actual).squaredNorm();
    m.r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;
    m.loss = sse / static_cast<double>(m.n);
    return m;
  }
  std::size_t correct = 0;
  double bce = 0.0;
  for (Eigen::Index i = 0; i < actual.size(); ++i) {
    const int a = actual(i) > 0.5 ? 1 : 0;
    const int p = predicted(i) >= 0.5 ? 1 : 0;
    ++m.confusion[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)];
    if (a == p) ++correct;
    const double pr = std::clamp(predicted(i), 1e-300, 1.0 - 1e-16);
    bce -= a == 1 ? std::log(pr) : std::log1p(-pr);
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  m.loss = bce / static_cast<double>(m.n);
  return m;
}

Metrics evaluate(const KgamModel& model, const Dataset& data, std::span<const std::size_t> idx) {
  if (idx.empty()) throw DataError("cannot evaluate an empty split");
  return metrics_from_predictions(model.task, predict_batch(model, data.features_of(idx)),
                                  data.targets_of(idx));
}

nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json j = {{"task", to_string(m.task)}, {"n", m.n}, {"rmse", m.rmse}, {"loss", m.loss}};
  if (m.task == Task::regression) {
    j["r2"] = m.r2;
  } else {
    j["accuracy"] = m.accuracy;
    j["confusion"] = {{m.confusion[0][0], m.confusion[0][1]}, {m.confusion[1][0], m.confusion[1][1]}};
  }
  return j;
}

std::string confusion_table(const Metrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-9s| %-12s %-12s\n"
                "---------+--------------------------\n"
                "%-9s| %-12zu %-12zu\n"
                "%-9s| %-12zu %-12zu\n",
                "", "Predicted 0", "Predicted 1", "Actual 0", m.confusion[0][0], m.confusion[0][1],
                "Actual 1", m.confusion[1][0], m.confusion[1][1]);
  return buf;
}

std::vector<OuterSample> outer_function_series(const KgamModel& model, std::optional<int> channel,
                                               int grid_points) {
  if (grid_points < 2) throw ConfigError("need at least 2 grid points");
  if (model.channel_ranges.empty()) throw DataError("model has no recorded channel ranges (untrained)");
  ChannelRange range;
  int q = 0;
  if (channel) {
    if (*channel < 0 || *channel >= model.channels()) {
      throw ConfigError("channel " + std::to_string(*channel) + " out of range [0, " +
                        std::to_string(model.channels() - 1) + "]");
    }
    q = *channel;
    range = model.channel_ranges[static_cast<std::size_t>(q)];
  } else {
    if (model.outer_mode == OuterMode::per_channel_g) {
      throw ConfigError("per-channel model: choose a channel");
    }
    range = model.channel_ranges.front();
    for (const auto& r : model.channel_ranges) {
      range.lo = std::min(range.lo, r.lo);
      range.hi = std::max(range.hi, r.hi);
    }
  }
  std::vector<double> zs(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    const double t = static_cast<double>(i) / (grid_points - 1);
    zs[static_cast<std::size_t>(i)] = i == grid_points - 1 ? range.hi : range.lo + t * (range.hi - range.lo);
  }
  const Eigen::RowVectorXd g = outer_eval(model, q, zs);
  std::vector<OuterSample> out(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) out[i] = {zs[i], g(static_cast<Eigen::Index>(i))};
  return out;
}

}  // namespace kgam
