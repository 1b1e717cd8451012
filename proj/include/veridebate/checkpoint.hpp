#pragma once

#include <filesystem>

#include <json.hpp>

#include "veridebate/model.hpp"

namespace veridebate {

// File layout: "VDBCKPT1", uint64 LE header length, JSON header, then the
// parameter vector as little-endian float64 values.
inline constexpr char kCheckpointMagic[] = "VDBCKPT1";

struct LoadedCheckpoint {
  AnalysisModel model;
  nlohmann::json header;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// `extra` is stored under the header's "metadata" key.
void save_checkpoint(const std::filesystem::path& path, const AnalysisModel& model,
                     const nlohmann::json& extra = nlohmann::json::object());

/// Throws std::runtime_error on a bad magic, truncated file, or parameter count mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace veridebate
