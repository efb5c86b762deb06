#pragma once

#include <optional>
#include <string>

#include "season/model.hpp"

namespace season::model {

struct Checkpoint {
  ModelConfig config;
  Parameters params;
  // Opaque training-state JSON (optimizer moments, rng, step); empty when
  // the checkpoint was saved for inference only.
  std::string train_state_json;
};

// Self-describing JSON container: {"version", "config", "params": {name:
// {"shape", "data"}}, "train_state"?}. Doubles round-trip exactly.
void save_checkpoint(const std::string& path, const Parameters& params,
                     const ModelConfig& config,
                     const std::string* train_state_json = nullptr);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace season::model
