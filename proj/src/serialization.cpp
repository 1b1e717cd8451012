#include "veridebate/serialization.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

namespace veridebate {

using nlohmann::json;

void to_json(json& j, const DebateTurn& turn) {
  j = json{{"turn_index", turn.turn_index},
           {"agent_id", turn.agent_id},
           {"stance", to_string(turn.stance)},
           {"role", to_string(turn.role)},
           {"stage", to_string(turn.stage)},
           {"text", turn.text},
           {"targets", turn.targets}};
}

void from_json(const json& j, DebateTurn& turn) {
  j.at("turn_index").get_to(turn.turn_index);
  j.at("agent_id").get_to(turn.agent_id);
  turn.stance = parse_stance(j.at("stance").get<std::string>());
  turn.role = parse_role(j.at("role").get<std::string>());
  turn.stage = parse_stage(j.at("stage").get<std::string>());
  j.at("text").get_to(turn.text);
  turn.targets = j.value("targets", std::vector<std::size_t>{});
}

void to_json(json& j, const DebateLog& log) { j = json{{"news_id", log.news_id}, {"turns", log.turns}}; }

void from_json(const json& j, DebateLog& log) {
  j.at("news_id").get_to(log.news_id);
  j.at("turns").get_to(log.turns);
}

void to_json(json& j, const SummaryReport& report) {
  j = json{{"news_id", report.news_id}, {"text", report.text}};
  if (report.verdict_hint) {
    j["verdict_hint"] = to_string(*report.verdict_hint);
  } else {
    j["verdict_hint"] = nullptr;
  }
}

void from_json(const json& j, SummaryReport& report) {
  j.at("news_id").get_to(report.news_id);
  j.at("text").get_to(report.text);
  report.verdict_hint.reset();
  if (auto it = j.find("verdict_hint"); it != j.end() && !it->is_null()) {
    report.verdict_hint = parse_verdict_hint(it->get<std::string>());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    out << content;
    if (!out) throw std::runtime_error(fmt::format("short write to {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace veridebate
