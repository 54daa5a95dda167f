#pragma once

#include <string>

#include "json.hpp"
#include "stf/model.hpp"

namespace stf {

// Checkpoint container (see docs/formats.md):
//   bytes 0-7   magic "STFCKPT1"
//   bytes 8-15  u64 little-endian header length H
//   H bytes     UTF-8 JSON: {"format", "config", "tensors": [{name, shape}]}
//   payload     each tensor in listed order, row-major little-endian f64
// The layout is stable: fields are only ever added to the JSON header.

struct Checkpoint {
    ModelConfig config;
    ParamSet params;
};

void save_checkpoint(const std::string& path, const ModelConfig& config, const ParamSet& params);
Checkpoint load_checkpoint(const std::string& path);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace stf
