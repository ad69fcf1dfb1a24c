#include "kgam/config.hpp"

#include <charconv>
#include <cstdlib>
#include <initializer_list>

#include "kgam/errors.hpp"
#include "kgam/io.hpp"

namespace kgam {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void take(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
      if (!it->is_number_integer() || it->get<long long>() < 0) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError("");
    }
    out = it->get<T>();
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + where + "." + key + ": " + it->dump());
  }
}

template <class T>
void take_optional(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (it->is_null()) {
    out.reset();
    return;
  }
  T v{};
  take(j, key, v, where);
  out = v;
}

template <class E, class Parse>
void take_enum(const json& j, const char* key, E& out, Parse parse, const std::string& where) {
  std::string s;
  take(j, key, s, where);
  if (!s.empty()) out = parse(s);
}

template <class T>
json nullable(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string to_string(DatasetKind k) { return k == DatasetKind::friedman ? "friedman" : "iris"; }

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "friedman") return DatasetKind::friedman;
  if (s == "iris") return DatasetKind::iris;
  throw ConfigError("unknown dataset '" + s + "'");
}

std::optional<std::size_t> DatasetSpec::resolved_train_n() const {
  if (train_n) return train_n;
  if (kind == DatasetKind::iris) return std::size_t{105};
  return std::nullopt;
}

int RunConfig::resolved_width() const noexcept {
  return hidden_width.value_or(outer_mode == OuterMode::per_channel_g ? 16 : 200);
}

std::vector<int> RunConfig::dims() const { return scalar_mlp_dims(resolved_width(), hidden_layers); }

KstParams RunConfig::kst_params() const {
  KstOptions o = kst;
  o.d = dataset.features();
  return make_kst_params(o);
}

void RunConfig::validate() const {
  train.validate();
  kst_params();
  dims();
  if (dataset.kind == DatasetKind::friedman && task != Task::regression) {
    throw ConfigError("the Friedman dataset has a real-valued target; use task regression");
  }
  if (dataset.kind == DatasetKind::friedman && dataset.n < 1) throw ConfigError("friedman n must be >= 1");
  if (!(dataset.noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
  if ((resolved_loss() == LossKind::logistic) != (task == Task::binary_classification)) {
    throw ConfigError("loss " + to_string(resolved_loss()) + " does not match task " + to_string(task));
  }
  if (outer_mode == OuterMode::badic_single_g && badic_base < 2) {
    throw ConfigError("badic_single_g needs badic_base >= 2");
  }
  if (dataset.train_n && *dataset.train_n < 1) throw ConfigError("train_n must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  check_keys(j, {"task", "dataset", "kst", "model", "train", "output_dir"}, "config");
  take_enum(j, "task", c.task, parse_task, "config");
  take(j, "output_dir", c.output_dir, "config");

  if (auto it = j.find("dataset"); it != j.end()) {
    const json& d = *it;
    const std::string w = "dataset";
    check_keys(d, {"kind", "n", "seed", "noise_sd", "path", "train_n", "split_seed"}, w);
    take_enum(d, "kind", c.dataset.kind, parse_dataset_kind, w);
    take(d, "n", c.dataset.n, w);
    take(d, "seed", c.dataset.seed, w);
    take(d, "noise_sd", c.dataset.noise_sd, w);
    take(d, "path", c.dataset.path, w);
    take_optional(d, "train_n", c.dataset.train_n, w);
    take(d, "split_seed", c.dataset.split_seed, w);
    if (c.dataset.kind == DatasetKind::iris && !j.contains("task")) c.task = Task::binary_classification;
  }
  if (auto it = j.find("kst"); it != j.end()) {
    const json& k = *it;
    const std::string w = "kst";
    check_keys(k, {"d", "gamma", "k", "n_beta", "lambda_mode", "lambda_ratio", "delta_mode", "shift_rule"}, w);
    take(k, "gamma", c.kst.gamma, w);
    take(k, "k", c.kst.k_digits, w);
    take_optional(k, "n_beta", c.kst.n_beta, w);
    take_enum(k, "lambda_mode", c.kst.lambda_mode, parse_lambda_mode, w);
    take(k, "lambda_ratio", c.kst.lambda_ratio, w);
    take_enum(k, "delta_mode", c.kst.delta_mode, parse_delta_mode, w);
    take_enum(k, "shift_rule", c.kst.shift_rule, parse_shift_rule, w);
    if (k.contains("d")) {
      int d = 0;
      take(k, "d", d, w);
      if (d != c.dataset.features()) {
        throw ConfigError("kst.d = " + std::to_string(d) + " but the dataset has " +
                          std::to_string(c.dataset.features()) + " features");
      }
    }
  }
  if (auto it = j.find("model"); it != j.end()) {
    const json& m = *it;
    const std::string w = "model";
    check_keys(m, {"outer_mode", "hidden_width", "hidden_layers", "badic_base", "loss"}, w);
    take_enum(m, "outer_mode", c.outer_mode, parse_outer_mode, w);
    take_optional(m, "hidden_width", c.hidden_width, w);
    take(m, "hidden_layers", c.hidden_layers, w);
    take(m, "badic_base", c.badic_base, w);
    if (m.contains("loss") && !m["loss"].is_null()) {
      std::string s;
      take(m, "loss", s, w);
      c.loss = parse_loss(s);
    }
  }
  if (auto it = j.find("train"); it != j.end()) {
    const json& t = *it;
    const std::string w = "train";
    check_keys(t, {"learning_rate", "epochs", "batch_size", "momentum", "optimizer", "adam_beta1",
                   "adam_beta2", "adam_epsilon", "seed", "standardize_inputs"},
               w);
    take(t, "learning_rate", c.train.learning_rate, w);
    take(t, "epochs", c.train.epochs, w);
    take(t, "batch_size", c.train.batch_size, w);
    take(t, "momentum", c.train.momentum, w);
    take_enum(t, "optimizer", c.train.optimizer, parse_optimizer, w);
    take(t, "adam_beta1", c.train.adam_beta1, w);
    take(t, "adam_beta2", c.train.adam_beta2, w);
    take(t, "adam_epsilon", c.train.adam_epsilon, w);
    take(t, "seed", c.train.seed, w);
    take(t, "standardize_inputs", c.train.standardize_inputs, w);
  }
  c.validate();
  return c;
}

json run_config_to_json(const RunConfig& c) {
  const KstParams p = c.kst_params();
  return {
      {"task", to_string(c.task)},
      {"dataset",
       {{"kind", to_string(c.dataset.kind)},
        {"n", c.dataset.n},
        {"seed", c.dataset.seed},
        {"noise_sd", c.dataset.noise_sd},
        {"path", c.dataset.path},
        {"train_n", nullable(c.dataset.resolved_train_n())},
        {"split_seed", c.dataset.split_seed}}},
      {"kst",
       {{"d", p.d},
        {"gamma", p.gamma},
        {"k", p.k_digits},
        {"n_beta", p.n_beta},
        {"lambda_mode", to_string(p.lambda_mode)},
        {"lambda_ratio", p.lambda_ratio},
        {"delta_mode", to_string(p.delta_mode)},
        {"shift_rule", to_string(p.shift_rule)}}},
      {"model",
       {{"outer_mode", to_string(c.outer_mode)},
        {"hidden_width", c.resolved_width()},
        {"hidden_layers", c.hidden_layers},
        {"badic_base", c.badic_base},
        {"loss", to_string(c.resolved_loss())}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"momentum", c.train.momentum},
        {"optimizer", to_string(c.train.optimizer)},
        {"adam_beta1", c.train.adam_beta1},
        {"adam_beta2", c.train.adam_beta2},
        {"adam_epsilon", c.train.adam_epsilon},
        {"seed", c.train.seed},
        {"standardize_inputs", c.train.standardize_inputs}}},
      {"output_dir", c.output_dir},
  };
}

RunConfig load_run_config(const std::string& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return run_config_from_json(j);
}

void apply_env_overrides(RunConfig& c) {
  const char* raw = std::getenv("KGAM_SEED");
  if (raw == nullptr) return;
  const std::string s(raw);
  std::uint64_t seed = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("KGAM_SEED must be a non-negative integer, got '" + s + "'");
  }
  c.train.seed = seed;
}

}  // namespace kgam
