#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "veridebate/domain.hpp"

namespace veridebate {

// JSON document shapes:
//   DebateLog     {news_id, turns:[{turn_index, agent_id, stance, role, stage, text, targets}]}
//   SummaryReport {news_id, text, verdict_hint}
void to_json(nlohmann::json& j, const DebateTurn& turn);
void from_json(const nlohmann::json& j, DebateTurn& turn);
void to_json(nlohmann::json& j, const DebateLog& log);
void from_json(const nlohmann::json& j, DebateLog& log);
void to_json(nlohmann::json& j, const SummaryReport& report);
void from_json(const nlohmann::json& j, SummaryReport& report);

/// Writes through a temporary file and renames, so readers never observe partial files.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace veridebate
