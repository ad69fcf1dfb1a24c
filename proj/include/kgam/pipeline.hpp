#pragma once

// dataset -> embedding -> outer networks, as driven by a RunConfig.

#include <optional>
#include <string>

#include "json.hpp"
#include "kgam/checkpoint.hpp"
#include "kgam/config.hpp"

namespace kgam {

// Generates or loads the data and applies the configured split.
Dataset build_dataset(const DatasetSpec& spec);

// Untrained model for this config; the normalizer is fitted on every row of X.
KgamModel build_model(const RunConfig& config, const Dataset& data);

struct SplitMetrics {
  Metrics train;
  std::optional<Metrics> test;
};

SplitMetrics evaluate_splits(const KgamModel& model, const Dataset& data);

struct RunResult {
  Dataset data;
  KgamModel model;
  TrainResult trace;
  SplitMetrics metrics;
};

RunResult run_training(const RunConfig& config);

// {"config": resolved config, "dataset": manifest summary, "train": ..., "test": ...}
nlohmann::json metrics_document(const RunConfig& config, const RunResult& run);
nlohmann::json metrics_document(const nlohmann::json& resolved_config, const Dataset& data,
                                const SplitMetrics& metrics, const TrainResult* trace);

Checkpoint make_checkpoint(const RunConfig& config, const RunResult& run);

// epoch,loss rows with %.17g values.
std::string loss_trace_csv(const TrainResult& trace);

}  // namespace kgam
