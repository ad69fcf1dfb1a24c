#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "kgam/checkpoint.hpp"
#include "kgam/config.hpp"
#include "kgam/errors.hpp"
#include "kgam/io.hpp"
#include "kgam/pipeline.hpp"
#include "kgam/rng.hpp"

using namespace kgam;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iris_path() { return std::string(KGAM_DATA_DIR) + "/iris.csv"; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kgam_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig quick_iris(const fs::path& out) {
  return run_config_from_json({{"dataset", {{"kind", "iris"}, {"path", iris_path()}}},
                               {"model", {{"outer_mode", "per_channel_g"}, {"hidden_width", 4}, {"hidden_layers", 2}}},
                               {"train", {{"epochs", 5}, {"optimizer", "adam"}}},
                               {"output_dir", out.string()}});
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KGAM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config defaults and resolution") {
  const RunConfig c = run_config_from_json(json::object());
  CHECK(c.task == Task::regression);
  CHECK(c.dataset.kind == DatasetKind::friedman);
  CHECK(c.kst_params().channels() == 11);
  CHECK(c.resolved_width() == 200);
  CHECK(c.hidden_layers == 18);
  CHECK(c.train.learning_rate == 1e-3);
  CHECK(c.train.batch_size == 16);
  CHECK(c.train.epochs == 2000);
  CHECK(c.train.optimizer == OptimizerKind::sgd);

  const RunConfig iris = run_config_from_json({{"dataset", {{"kind", "iris"}}}, {"kst", {{"k", 6}}}});
  CHECK(iris.task == Task::binary_classification);
  CHECK(iris.kst_params().channels() == 7);
  CHECK(iris.dataset.resolved_train_n() == std::size_t{105});
  CHECK(iris.resolved_loss() == LossKind::logistic);

  const RunConfig per = run_config_from_json({{"model", {{"outer_mode", "per_channel_g"}}}});
  CHECK(per.resolved_width() == 16);
}

TEST_CASE("config JSON round trip and rejection") {
  const RunConfig c = quick_iris("/tmp/x");
  const json j = run_config_to_json(c);
  CHECK(run_config_to_json(run_config_from_json(j)) == j);

  CHECK_THROWS_AS(run_config_from_json({{"trian", {}}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"train", {{"lr", 1}}}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"train", {{"learning_rate", "fast"}}}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"train", {{"seed", -1}}}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"kst", {{"gamma", 6}}}}), ConfigError);  // gamma < d + 2
  CHECK_THROWS_AS(run_config_from_json({{"kst", {{"d", 3}}}}), ConfigError);      // Friedman has d = 5
  CHECK_THROWS_AS(run_config_from_json({{"task", "binary_classification"}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"model", {{"outer_mode", "badic_single_g"}, {"badic_base", 1}}}}),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"model", {{"loss", "logistic"}}}}), ConfigError);
}

TEST_CASE("KGAM_SEED overrides the training seed") {
  RunConfig c = run_config_from_json({{"train", {{"seed", 5}}}});
  ::unsetenv("KGAM_SEED");
  apply_env_overrides(c);
  CHECK(c.train.seed == 5);
  ::setenv("KGAM_SEED", "123", 1);
  apply_env_overrides(c);
  CHECK(c.train.seed == 123);
  ::setenv("KGAM_SEED", "12x", 1);
  CHECK_THROWS_AS(apply_env_overrides(c), ConfigError);
  ::unsetenv("KGAM_SEED");
}

TEST_CASE("atomic writes leave no temporary files") {
  const fs::path dir = scratch("atomic");
  write_file_atomic(dir / "a.txt", "first");
  write_file_atomic(dir / "a.txt", "second");
  CHECK(read_text_file(dir / "a.txt") == "second");
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++count;
  CHECK(count == 1);
  CHECK_THROWS_AS(write_file_atomic("/proc/kgam_nope/x", "y"), DataError);
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("checkpoint round trip is byte-identical and predicts bit-identically") {
  const fs::path dir = scratch("ckpt");
  const RunConfig c = quick_iris(dir);
  const RunResult r = run_training(c);
  const Checkpoint ck = make_checkpoint(c, r);
  save_checkpoint(dir / "a.json", ck);
  const Checkpoint back = load_checkpoint(dir / "a.json");
  save_checkpoint(dir / "b.json", back);
  CHECK(read_text_file(dir / "a.json") == read_text_file(dir / "b.json"));
  CHECK(back.model.nets == r.model.nets);
  CHECK(back.model.params == r.model.params);
  CHECK(back.model.normalizer == r.model.normalizer);
  CHECK(back.model.input_scaling == r.model.input_scaling);
  CHECK(back.loss_trace == r.trace.loss_trace);

  SplitMix64 rng(9);
  const auto& nz = r.model.normalizer;
  Eigen::MatrixXd X(1000, 3);
  for (Eigen::Index i = 0; i < 1000; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      X(i, j) = rng.uniform(nz.min[static_cast<std::size_t>(j)], nz.max[static_cast<std::size_t>(j)]);
    }
  }
  const Eigen::VectorXd a = predict_batch(r.model, X);
  const Eigen::VectorXd b = predict_batch(back.model, X);
  CHECK(a == b);
}

TEST_CASE("checkpoint loading rejects bad documents") {
  const fs::path dir = scratch("badckpt");
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), DataError);
  write_file_atomic(dir / "garbage.json", "{not json");
  CHECK_THROWS_AS(load_checkpoint(dir / "garbage.json"), DataError);

  const RunConfig c = quick_iris(dir);
  const RunResult r = run_training(c);
  json j = checkpoint_to_json(make_checkpoint(c, r));
  j["format_version"] = 99;
  CHECK_THROWS_AS(checkpoint_from_json(j), DataError);
  j["format_version"] = kCheckpointFormatVersion;
  j["model"]["nets"][0]["weights"][0].erase(0);
  CHECK_THROWS_AS(checkpoint_from_json(j), DataError);
}

TEST_CASE("identical config and seed give identical metrics") {
  const RunConfig c = quick_iris(scratch("det"));
  const json a = metrics_document(c, run_training(c));
  const json b = metrics_document(c, run_training(c));
  CHECK(a.dump() == b.dump());
  CHECK(a["config"] == run_config_to_json(c));
  CHECK(a["test"]["n"] == 45);
}

TEST_CASE("epochs = 0 checkpoints the initialised model") {
  RunConfig c = quick_iris(scratch("zero"));
  c.train.epochs = 0;
  const RunResult r = run_training(c);
  CHECK(r.trace.loss_trace.empty());
  CHECK(loss_trace_csv(r.trace) == "epoch,loss\n");
  const RunConfig d = run_config_from_json(json::object());
  RunConfig fr = d;
  fr.train.epochs = 0;
  fr.hidden_layers = 1;
  CHECK(run_training(fr).model.channels() == 11);
}

TEST_CASE("command-line tool") {
  const fs::path dir = scratch("tool");
  const std::string out = dir.string();
  CHECK(run_cli("psi --gamma 10 --k 3 --grid 1001 --out " + out + "/psi3.csv") == 0);
  const std::string psi = read_text_file(dir / "psi3.csv");
  CHECK(std::count(psi.begin(), psi.end(), '\n') == 1002);
  CHECK(run_cli("psi --grid 2 --out " + out + "/psi2.csv") == 0);
  CHECK(read_text_file(dir / "psi2.csv").rfind("x,psi\n0,0\n1,", 0) == 0);

  CHECK(run_cli("simulate --n 10 --out " + out + "/f.csv --manifest " + out + "/f.json") == 0);
  CHECK(fs::exists(dir / "f.json"));

  const std::string train = "train --dataset iris --iris-path " + iris_path() +
                            " --outer-mode per_channel_g --width 4 --layers 1 --epochs 3 --out-dir " + out + "/run";
  CHECK(run_cli(train) == 0);
  CHECK(fs::exists(dir / "run" / "checkpoint.json"));
  CHECK(fs::exists(dir / "run" / "metrics.json"));
  CHECK(fs::exists(dir / "run" / "loss.csv"));
  CHECK(run_cli("eval --checkpoint " + out + "/run/checkpoint.json --out " + out + "/eval.json") == 0);
  const json saved = read_json_file(dir / "run" / "metrics.json");
  const json evald = read_json_file(dir / "eval.json");
  CHECK(saved["test"] == evald["test"]);
  CHECK(saved["train"] == evald["train"]);

  CHECK(run_cli("gplot --checkpoint " + out + "/run/checkpoint.json --channel 0 --grid 5 --out " + out + "/g0.csv") == 0);
  CHECK(run_cli("gplot --checkpoint " + out + "/run/checkpoint.json --channel 7") == 1);
  CHECK(run_cli("glm --iris-path " + iris_path()) == 0);

  CHECK(run_cli("") == 1);
  CHECK(run_cli("train --no-such-flag") == 1);
  CHECK(run_cli("eval --checkpoint " + out + "/missing.json") == 2);
  CHECK(run_cli("train --dataset iris --iris-path " + out + "/missing.csv --out-dir " + out + "/x") == 2);
  CHECK(run_cli("train --epochs 3 --layers 2 --width 8 --lr 1e12 --out-dir " + out + "/div") == 3);
  CHECK(run_cli("train --epochs 1 --layers 1 --kst-oops 1") == 1);

  // KGAM_SEED changes the run; the metrics echo the seed actually used
  CHECK(run_cli("train --epochs 1 --layers 1 --width 8 --out-dir " + out + "/s1") == 0);
  ::setenv("KGAM_SEED", "777", 1);
  CHECK(run_cli("train --epochs 1 --layers 1 --width 8 --out-dir " + out + "/s2") == 0);
  ::unsetenv("KGAM_SEED");
  CHECK(read_json_file(dir / "s2" / "metrics.json")["config"]["train"]["seed"] == 777);
  CHECK(read_json_file(dir / "s1" / "metrics.json")["config"]["train"]["seed"] == 42);
}
