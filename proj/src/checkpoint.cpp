#include "kgam/checkpoint.hpp"

#include <cmath>

#include "kgam/errors.hpp"
#include "kgam/io.hpp"

namespace kgam {

namespace {

using nlohmann::json;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DataError(std::string("cannot serialize non-finite ") + what);
}

json row_major(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      require_finite(m(r, c), "weight");
      out.push_back(m(r, c));
    }
  }
  return out;
}

std::vector<double> doubles(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw DataError(std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("checkpoint is missing '") + key + "'");
  return *it;
}

}  // namespace

json mlp_to_json(const Mlp& net) {
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < net.layers(); ++l) {
    weights.push_back(row_major(net.weights[l]));
    json b = json::array();
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
      require_finite(net.biases[l](i), "bias");
      b.push_back(net.biases[l](i));
    }
    biases.push_back(std::move(b));
  }
  return {{"dims", net.dims}, {"weights", weights}, {"biases", biases}};
}

Mlp mlp_from_json(const json& j) {
  if (!j.is_object()) throw DataError("network entry must be an object");
  Mlp net;
  try {
    net = zero_mlp(field(j, "dims").get<std::vector<int>>());
  } catch (const ConfigError& e) {
    throw DataError(std::string("bad network dims: ") + e.what());
  } catch (const json::exception& e) {
    throw DataError(std::string("bad network dims: ") + e.what());
  }
  const json& w = field(j, "weights");
  const json& b = field(j, "biases");
  if (!w.is_array() || !b.is_array() || w.size() != net.layers() || b.size() != net.layers()) {
    throw DataError("network layer count does not match dims");
  }
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const auto wv = doubles(w[l], "weights");
    const auto bv = doubles(b[l], "biases");
    auto& W = net.weights[l];
    if (wv.size() != static_cast<std::size_t>(W.size()) ||
        bv.size() != static_cast<std::size_t>(net.biases[l].size())) {
      throw DataError("layer " + std::to_string(l) + " has the wrong number of parameters");
    }
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = wv[i++];
    }
    for (std::size_t k = 0; k < bv.size(); ++k) net.biases[l](static_cast<Eigen::Index>(k)) = bv[k];
  }
  return net;
}

json model_to_json(const KgamModel& model) {
  const KstParams& p = model.params;
  json nets = json::array();
  for (const auto& n : model.nets) nets.push_back(mlp_to_json(n));
  json ranges = json::array();
  for (const auto& r : model.channel_ranges) ranges.push_back({r.lo, r.hi});
  json scaling = json::array();
  for (const auto& s : model.input_scaling) scaling.push_back({{"shift", s.shift}, {"scale", s.scale}});
  require_finite(model.intercept, "intercept");
  return {
      {"task", to_string(model.task)},
      {"outer_mode", to_string(model.outer_mode)},
      {"badic_base", model.badic_base},
      {"kst",
       {{"d", p.d},
        {"gamma", p.gamma},
        {"n_beta", p.n_beta},
        {"k", p.k_digits},
        {"a", p.a},
        {"lambda", p.lambda},
        {"lambda_mode", to_string(p.lambda_mode)},
        {"lambda_ratio", p.lambda_ratio},
        {"delta_mode", to_string(p.delta_mode)},
        {"shift_rule", to_string(p.shift_rule)}}},
      {"normalizer",
       {{"min", model.normalizer.min},
        {"max", model.normalizer.max},
        {"target_hi", model.normalizer.target_hi}}},
      {"intercept", model.intercept},
      {"nets", nets},
      {"input_scaling", scaling},
      {"channel_ranges", ranges},
  };
}

KgamModel model_from_json(const json& j) {
  if (!j.is_object()) throw DataError("model must be an object");
  KgamModel m;
  try {
    m.task = parse_task(field(j, "task").get<std::string>());
    m.outer_mode = parse_outer_mode(field(j, "outer_mode").get<std::string>());
    m.badic_base = field(j, "badic_base").get<int>();
    const json& k = field(j, "kst");
    KstParams& p = m.params;
    p.d = field(k, "d").get<int>();
    p.gamma = field(k, "gamma").get<int>();
    p.n_beta = field(k, "n_beta").get<int>();
    p.k_digits = field(k, "k").get<int>();
    p.a = field(k, "a").get<double>();
    p.lambda = doubles(field(k, "lambda"), "lambda");
    p.lambda_mode = parse_lambda_mode(field(k, "lambda_mode").get<std::string>());
    p.lambda_ratio = field(k, "lambda_ratio").get<double>();
    p.delta_mode = parse_delta_mode(field(k, "delta_mode").get<std::string>());
    p.shift_rule = parse_shift_rule(field(k, "shift_rule").get<std::string>());
    const json& nz = field(j, "normalizer");
    m.normalizer.min = doubles(field(nz, "min"), "normalizer.min");
    m.normalizer.max = doubles(field(nz, "max"), "normalizer.max");
    m.normalizer.target_hi = field(nz, "target_hi").get<double>();
    m.intercept = field(j, "intercept").get<double>();
    for (const auto& n : field(j, "nets")) m.nets.push_back(mlp_from_json(n));
    for (const auto& s : field(j, "input_scaling")) {
      m.input_scaling.push_back({field(s, "shift").get<double>(), field(s, "scale").get<double>()});
    }
    for (const auto& r : field(j, "channel_ranges")) {
      const auto v = doubles(r, "channel range");
      if (v.size() != 2) throw DataError("channel range must be [lo, hi]");
      m.channel_ranges.push_back({v[0], v[1]});
    }
    m.validate();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("invalid model: ") + e.what());
  }
  if (m.normalizer.min.size() != m.normalizer.max.size()) {
    throw DataError("normalizer min/max lengths differ");
  }
  return m;
}

json checkpoint_to_json(const Checkpoint& c) {
  for (double v : c.loss_trace) require_finite(v, "loss");
  return {{"format_version", c.format_version},
          {"config", c.config},
          {"model", model_to_json(c.model)},
          {"trace", {{"initial_loss", c.initial_loss}, {"loss", c.loss_trace}}},
          {"metrics", c.metrics}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object()) throw DataError("checkpoint must be a JSON object");
  Checkpoint c;
  const json& version = field(j, "format_version");
  if (!version.is_number_integer() || version.get<int>() != kCheckpointFormatVersion) {
    throw DataError("unsupported checkpoint format_version " + version.dump() + " (expected " +
                    std::to_string(kCheckpointFormatVersion) + ")");
  }
  c.config = field(j, "config");
  c.model = model_from_json(field(j, "model"));
  const json& trace = field(j, "trace");
  try {
    c.initial_loss = field(trace, "initial_loss").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed trace: ") + e.what());
  }
  c.loss_trace = doubles(field(trace, "loss"), "trace.loss");
  if (auto it = j.find("metrics"); it != j.end()) c.metrics = *it;
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file_atomic(path, dump_json(checkpoint_to_json(c)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json_file(path));
}

}  // namespace kgam
