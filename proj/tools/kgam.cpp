// kgam command line: psi, embed, simulate, train, eval, gplot, glm.
//
// Exit status: 0 ok, 1 usage/config error, 2 data error, 3 training divergence.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kgam/checkpoint.hpp"
#include "kgam/config.hpp"
#include "kgam/embedding.hpp"
#include "kgam/errors.hpp"
#include "kgam/io.hpp"
#include "kgam/koppen.hpp"
#include "kgam/pipeline.hpp"
#include "kgam/smoothers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kgam;

namespace {

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

// Flags shared by every command that builds a RunConfig.  Each set flag is
// written into a JSON patch that is merged over the --config file.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> task, dataset, iris_path, outer_mode, optimizer, loss, lambda_mode,
      delta_mode, shift_rule, out_dir;
  std::optional<std::size_t> n, train_n;
  std::optional<std::uint64_t> data_seed, split_seed, seed;
  std::optional<double> noise, lr, momentum;
  std::optional<int> gamma, k, n_beta, width, layers, epochs, batch_size, badic_base;
  std::optional<bool> standardize;

  void add(CLI::App* app, bool training) {
    app->add_option("--config", config_path, "JSON run config");
    app->add_option("--task", task, "regression | binary_classification");
    app->add_option("--dataset", dataset, "friedman | iris");
    app->add_option("--iris-path", iris_path, "Iris CSV");
    app->add_option("--n", n, "Friedman rows");
    app->add_option("--data-seed", data_seed, "Friedman generator seed");
    app->add_option("--noise", noise, "Friedman noise sd");
    app->add_option("--train-n", train_n, "training rows (rest held out)");
    app->add_option("--split-seed", split_seed, "train/test shuffle seed");
    app->add_option("--gamma", gamma, "digit base");
    app->add_option("--k", k, "digits of psi_k");
    app->add_option("--n-beta", n_beta, "n in beta(r)");
    app->add_option("--lambda-mode", lambda_mode, "sprecher | geometric");
    app->add_option("--delta-mode", delta_mode, "index | zero");
    app->add_option("--shift-rule", shift_rule, "gamma | sprecher_proof");
    app->add_option("--outer-mode", outer_mode, "shared_g | per_channel_g | badic_single_g");
    app->add_option("--badic-base", badic_base, "B for badic_single_g");
    app->add_option("--width", width, "hidden width of g");
    app->add_option("--layers", layers, "hidden layers of g");
    app->add_option("--seed", seed, "training seed (KGAM_SEED overrides)");
    if (!training) return;
    app->add_option("--loss", loss, "l2 | logistic");
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--momentum", momentum, "momentum");
    app->add_option("--optimizer", optimizer, "sgd | sgd_momentum | adam");
    app->add_option("--epochs", epochs, "epochs");
    app->add_option("--batch-size", batch_size, "mini-batch size");
    app->add_option("--standardize", standardize, "rescale each network input to [-1, 1]");
    app->add_option("--out-dir", out_dir, "output directory");
  }

  RunConfig resolve() const {
    json j = config_path.empty() ? json::object() : [&] {
      try {
        return read_json_file(config_path);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
    }();
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    auto set = [&](const char* section, const char* key, const auto& v) {
      if (!v) return;
      if (section == nullptr) {
        j[key] = *v;
      } else {
        j[section][key] = *v;
      }
    };
    set(nullptr, "task", task);
    set("dataset", "kind", dataset);
    set("dataset", "path", iris_path);
    set("dataset", "n", n);
    set("dataset", "seed", data_seed);
    set("dataset", "noise_sd", noise);
    set("dataset", "train_n", train_n);
    set("dataset", "split_seed", split_seed);
    set("kst", "gamma", gamma);
    set("kst", "k", k);
    set("kst", "n_beta", n_beta);
    set("kst", "lambda_mode", lambda_mode);
    set("kst", "delta_mode", delta_mode);
    set("kst", "shift_rule", shift_rule);
    set("model", "outer_mode", outer_mode);
    set("model", "badic_base", badic_base);
    set("model", "hidden_width", width);
    set("model", "hidden_layers", layers);
    set("model", "loss", loss);
    set("train", "learning_rate", lr);
    set("train", "momentum", momentum);
    set("train", "optimizer", optimizer);
    set("train", "epochs", epochs);
    set("train", "batch_size", batch_size);
    set("train", "seed", seed);
    set("train", "standardize_inputs", standardize);
    set(nullptr, "output_dir", out_dir);
    RunConfig c = run_config_from_json(j);
    apply_env_overrides(c);
    c.validate();
    return c;
  }
};

void print_metrics(const char* label, const Metrics& m) {
  if (m.task == Task::regression) {
    std::printf("%s: n=%zu rmse=%.6g r2=%.6g\n", label, m.n, m.rmse, m.r2);
  } else {
    std::printf("%s: n=%zu accuracy=%.6g rmse=%.6g\n%s", label, m.n, m.accuracy, m.rmse,
                confusion_table(m).c_str());
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Kolmogorov-GAM experiments"};
  app.require_subcommand(1);

  // psi
  auto* psi = app.add_subcommand("psi", "sample the Koppen function psi_k on a grid");
  int psi_gamma = 10, psi_k = 3, psi_n = 2, psi_grid = 1001;
  double psi_lo = 0.0, psi_hi = 1.0;
  std::string psi_out;
  psi->add_option("--gamma", psi_gamma, "digit base")->capture_default_str();
  psi->add_option("--k", psi_k, "digits")->capture_default_str();
  psi->add_option("--n", psi_n, "n in beta(r)")->capture_default_str();
  psi->add_option("--grid", psi_grid, "grid points")->capture_default_str();
  psi->add_option("--lo", psi_lo, "grid start")->capture_default_str();
  psi->add_option("--hi", psi_hi, "grid end")->capture_default_str();
  psi->add_option("--out", psi_out, "CSV path (default stdout)");

  // embed
  auto* embed = app.add_subcommand("embed", "embed a dataset into the 2d+1 channels");
  ConfigFlags embed_flags;
  embed_flags.add(embed, false);
  std::string embed_out;
  embed->add_option("--out", embed_out, "CSV path (default stdout)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "generate the Friedman data set");
  std::size_t sim_n = 100;
  std::uint64_t sim_seed = 42;
  double sim_noise = 1.0;
  std::string sim_out, sim_manifest;
  simulate->add_option("--n", sim_n, "rows")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "generator seed")->capture_default_str();
  simulate->add_option("--noise", sim_noise, "noise sd")->capture_default_str();
  simulate->add_option("--out", sim_out, "CSV path (default stdout)");
  simulate->add_option("--manifest", sim_manifest, "write a JSON manifest here");

  // train
  auto* trn = app.add_subcommand("train", "train a K-GAM and write checkpoint, metrics and loss trace");
  ConfigFlags train_flags;
  train_flags.add(trn, true);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_ckpt, ev_config, ev_out;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint JSON")->required();
  ev->add_option("--config", ev_config, "take the dataset from this config instead");
  ev->add_option("--out", ev_out, "write metrics JSON here");

  // gplot
  auto* gp = app.add_subcommand("gplot", "sample a trained outer function over its z range");
  std::string gp_ckpt, gp_out;
  std::optional<int> gp_channel;
  int gp_grid = 501;
  gp->add_option("--checkpoint", gp_ckpt, "checkpoint JSON")->required();
  auto* ch_opt = gp->add_option("--channel", gp_channel, "channel q");
  gp->add_flag("--shared", "the single shared g over the union of ranges")->excludes(ch_opt);
  gp->add_option("--grid", gp_grid, "grid points")->capture_default_str();
  gp->add_option("--out", gp_out, "CSV path (default stdout)");

  // glm
  auto* glm = app.add_subcommand("glm", "logistic regression baseline on binarized Iris");
  std::string glm_path = "data/iris.csv", glm_out;
  std::size_t glm_train_n = 105;
  std::uint64_t glm_seed = 42;
  bool glm_full = false;
  glm->add_option("--iris-path", glm_path, "Iris CSV")->capture_default_str();
  glm->add_option("--train-n", glm_train_n, "training rows")->capture_default_str();
  glm->add_option("--split-seed", glm_seed, "split seed")->capture_default_str();
  glm->add_flag("--full", glm_full, "fit on all rows, no test split");
  glm->add_option("--out", glm_out, "write fit JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  if (*psi) {
    KstOptions o;
    o.d = 1;
    o.gamma = psi_gamma;
    o.k_digits = psi_k;
    o.n_beta = psi_n;
    const KstParams p = make_kst_params(o);
    emit(psi_out, psi_series_csv(psi_series(p, psi_grid, psi_lo, psi_hi)));
  } else if (*embed) {
    const RunConfig c = embed_flags.resolve();
    const Dataset data = build_dataset(c.dataset);
    const KgamModel m = build_model(c, data);
    const Eigen::MatrixXd z = embed_rows(m, data.X);
    std::string csv;
    for (Eigen::Index q = 0; q < z.cols(); ++q) csv += (q ? ",z" : "z") + std::to_string(q);
    csv += "," + data.target_name + "\n";
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index q = 0; q < z.cols(); ++q) csv += format_double(z(i, q)) + ",";
      csv += format_double(data.y(i)) + "\n";
    }
    emit(embed_out, csv);
  } else if (*simulate) {
    if (!(sim_noise >= 0.0)) throw ConfigError("--noise must be >= 0");
    if (sim_n < 1) throw ConfigError("--n must be >= 1");
    const Dataset data = friedman_generate(sim_n, sim_seed, sim_noise);
    emit(sim_out, dataset_csv(data));
    if (!sim_manifest.empty()) write_file_atomic(sim_manifest, dump_json(dataset_manifest(data)));
  } else if (*trn) {
    const RunConfig c = train_flags.resolve();
    const RunResult r = run_training(c);
    for (const auto& w : r.data.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    const fs::path dir(c.output_dir);
    save_checkpoint(dir / "checkpoint.json", make_checkpoint(c, r));
    write_file_atomic(dir / "metrics.json", dump_json(metrics_document(c, r)));
    write_file_atomic(dir / "loss.csv", loss_trace_csv(r.trace));
    std::printf("channels: %d\n", r.model.channels());
    if (!r.trace.loss_trace.empty()) {
      std::printf("loss: %.6g -> %.6g over %zu epochs\n", r.trace.initial_loss, r.trace.loss_trace.back(),
                  r.trace.loss_trace.size());
    }
    print_metrics("train", r.metrics.train);
    if (r.metrics.test) print_metrics("test", *r.metrics.test);
    std::printf("wrote %s\n", dir.string().c_str());
  } else if (*ev) {
    const Checkpoint ck = load_checkpoint(ev_ckpt);
    const RunConfig c = ev_config.empty() ? run_config_from_json(ck.config) : load_run_config(ev_config);
    const Dataset data = build_dataset(c.dataset);
    if (data.features() != static_cast<std::size_t>(ck.model.params.d)) {
      throw DataError("checkpoint expects " + std::to_string(ck.model.params.d) +
                      " features, dataset has " + std::to_string(data.features()));
    }
    const SplitMetrics m = evaluate_splits(ck.model, data);
    const json doc = metrics_document(run_config_to_json(c), data, m, nullptr);
    print_metrics("train", m.train);
    if (m.test) print_metrics("test", *m.test);
    if (!ev_out.empty()) write_file_atomic(ev_out, dump_json(doc));
  } else if (*gp) {
    const Checkpoint ck = load_checkpoint(gp_ckpt);
    const auto series = outer_function_series(ck.model, gp_channel, gp_grid);
    std::string csv = "z,g\n";
    for (const auto& s : series) csv += format_double(s.z) + "," + format_double(s.g) + "\n";
    emit(gp_out, csv);
  } else if (*glm) {
    Dataset data = iris_binarize(iris_load(glm_path));
    if (!glm_full) data = split(data, glm_train_n, glm_seed);
    const GlmFit fit = glm_fit(data.features_of(data.train_idx), data.targets_of(data.train_idx),
                               data.feature_names);
    double rmse = -1.0;
    json j = glm_to_json(fit);
    if (!data.test_idx.empty()) {
      double se = 0.0;
      for (auto i : data.test_idx) {
        const double pr = fit.predict_probability(data.X.row(static_cast<Eigen::Index>(i)).transpose());
        se += (pr - data.y(static_cast<Eigen::Index>(i))) * (pr - data.y(static_cast<Eigen::Index>(i)));
      }
      rmse = std::sqrt(se / static_cast<double>(data.test_idx.size()));
      j["test_rmse"] = rmse;
    }
    std::cout << glm_summary(fit, rmse);
    if (!glm_out.empty()) write_file_atomic(glm_out, dump_json(j));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::divergence);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::usage);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::data);
  }
}
