#include "kgam/pipeline.hpp"

#include "kgam/errors.hpp"
#include "kgam/io.hpp"

namespace kgam {

Dataset build_dataset(const DatasetSpec& spec) {
  Dataset data = spec.kind == DatasetKind::friedman
                     ? friedman_generate(spec.n, spec.seed, spec.noise_sd)
                     : iris_binarize(iris_load(spec.path));
  if (const auto train_n = spec.resolved_train_n()) {
    if (*train_n >= data.rows()) {
      throw DataError("train_n = " + std::to_string(*train_n) + " leaves no test rows (dataset has " +
                      std::to_string(data.rows()) + ")");
    }
    data = split(data, *train_n, spec.split_seed);
  }
  return data;
}

KgamModel build_model(const RunConfig& config, const Dataset& data) {
  const KstParams params = config.kst_params();
  if (data.features() != static_cast<std::size_t>(params.d)) {
    throw DataError("dataset has " + std::to_string(data.features()) + " features, config expects " +
                    std::to_string(params.d));
  }
  const Normalizer normalizer = fit_normalizer(data.X, params, data.feature_names);
  return make_model(params, normalizer, config.outer_mode, config.task, config.dims(), config.train.seed,
                    config.badic_base);
}

SplitMetrics evaluate_splits(const KgamModel& model, const Dataset& data) {
  SplitMetrics m;
  m.train = evaluate(model, data, data.train_idx);
  if (!data.test_idx.empty()) m.test = evaluate(model, data, data.test_idx);
  return m;
}

RunResult run_training(const RunConfig& config) {
  config.validate();
  RunResult r;
  r.data = build_dataset(config.dataset);
  r.model = build_model(config, r.data);
  r.trace = train(r.model, r.data, config.train, config.resolved_loss());
  r.metrics = evaluate_splits(r.model, r.data);
  return r;
}

nlohmann::json metrics_document(const nlohmann::json& resolved_config, const Dataset& data,
                                const SplitMetrics& metrics, const TrainResult* trace) {
  nlohmann::json j = {{"config", resolved_config},
                      {"dataset",
                       {{"rows", data.rows()},
                        {"train_rows", data.train_idx.size()},
                        {"test_rows", data.test_idx.size()},
                        {"provenance", data.provenance},
                        {"warnings", data.warnings}}},
                      {"train", metrics_to_json(metrics.train)}};
  if (metrics.test) j["test"] = metrics_to_json(*metrics.test);
  if (trace != nullptr) {
    j["initial_loss"] = trace->initial_loss;
    j["final_loss"] = trace->loss_trace.empty() ? trace->initial_loss : trace->loss_trace.back();
    j["epochs_run"] = trace->loss_trace.size();
  }
  return j;
}

nlohmann::json metrics_document(const RunConfig& config, const RunResult& run) {
  return metrics_document(run_config_to_json(config), run.data, run.metrics, &run.trace);
}

Checkpoint make_checkpoint(const RunConfig& config, const RunResult& run) {
  Checkpoint c;
  c.config = run_config_to_json(config);
  c.model = run.model;
  c.initial_loss = run.trace.initial_loss;
  c.loss_trace = run.trace.loss_trace;
  c.metrics = metrics_document(config, run);
  c.metrics.erase("config");
  return c;
}

std::string loss_trace_csv(const TrainResult& trace) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < trace.loss_trace.size(); ++e) {
    out += std::to_string(e) + "," + format_double(trace.loss_trace[e]) + "\n";
  }
  return out;
}

}  // namespace kgam
