#pragma once

// Run configuration: everything needed to rebuild a dataset and train a model.
// JSON in, JSON out; to_json always emits the fully resolved form.

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "kgam/datasets.hpp"
#include "kgam/koppen.hpp"
#include "kgam/model.hpp"
#include "kgam/neural.hpp"

namespace kgam {

enum class DatasetKind { friedman, iris };

std::string to_string(DatasetKind k);
DatasetKind parse_dataset_kind(const std::string& s);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::friedman;
  // friedman
  std::size_t n = 100;
  std::uint64_t seed = 42;
  double noise_sd = 1.0;
  // iris
  std::string path = "data/iris.csv";
  // Rows used for training; the rest are held out.  Unset means every row
  // trains (Friedman) or 105 (Iris).
  std::optional<std::size_t> train_n;
  std::uint64_t split_seed = 42;

  int features() const noexcept { return kind == DatasetKind::friedman ? 5 : 3; }
  std::optional<std::size_t> resolved_train_n() const;
  bool operator==(const DatasetSpec&) const = default;
};

struct RunConfig {
  Task task = Task::regression;
  DatasetSpec dataset;
  KstOptions kst;  // kst.d is always taken from the dataset
  OuterMode outer_mode = OuterMode::shared_g;
  int badic_base = 10;
  // Unset width: 16 for per-channel networks, 200 for a single shared one.
  std::optional<int> hidden_width;
  int hidden_layers = 18;
  std::optional<LossKind> loss;
  TrainConfig train;
  std::string output_dir = "runs";

  int resolved_width() const noexcept;
  std::vector<int> dims() const;
  LossKind resolved_loss() const noexcept { return loss.value_or(default_loss(task)); }
  KstParams kst_params() const;
  // Throws ConfigError when fields contradict each other.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are an error.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::string& path);

// KGAM_SEED, if set, replaces train.seed.  Malformed values throw ConfigError.
void apply_env_overrides(RunConfig& c);

}  // namespace kgam
