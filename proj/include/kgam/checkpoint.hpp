#pragma once

// JSON checkpoints.  Doubles are written in shortest round-trip form, so
// save -> load -> save reproduces the file byte for byte and a loaded model
// predicts bit-identically.

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "kgam/model.hpp"

namespace kgam {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  nlohmann::json config = nlohmann::json::object();  // resolved RunConfig
  KgamModel model;
  double initial_loss = 0.0;
  std::vector<double> loss_trace;
  nlohmann::json metrics = nlohmann::json::object();
};

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const KgamModel& model);
KgamModel model_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& c);
// Throws DataError on a malformed document or an unsupported format_version.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kgam
