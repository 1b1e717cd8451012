#include "veridebate/prompts.hpp"

#include <array>
#include <fmt/format.h>

#include "veridebate/errors.hpp"
#include "veridebate/serialization.hpp"

namespace veridebate {

namespace {

constexpr std::array<std::string_view, 7> kPlaceholders{"news", "stance", "role", "history", "team", "opponent_team",
                                                        "criteria"};

constexpr std::array<std::pair<TemplateId, std::string_view>, 5> kTemplateNames{{
    {TemplateId::Opening, "opening"},
    {TemplateId::CrossExam, "cross_exam"},
    {TemplateId::Rebuttal, "rebuttal"},
    {TemplateId::Closing, "closing"},
    {TemplateId::Synthesis, "synthesis"},
}};

std::string key_for(TemplateId id, Language language) {
  return fmt::format("{}/{}", to_string(language), to_string(id));
}

std::string_view trim_newlines(std::string_view s) {
  while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  return s;
}

// Cuts a UTF-8 string to at most max_bytes without splitting a code point.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return s;
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut);
}

std::string render_full_turn(const DebateTurn& turn) {
  return fmt::format("[Turn {}] {} {} ({}):\n{}", turn.turn_index, team_name(turn.stance), display_name(turn.role),
                     display_name(turn.stage), turn.text);
}

}  // namespace

std::string_view to_string(TemplateId id) {
  for (const auto& [tid, name] : kTemplateNames) {
    if (tid == id) return name;
  }
  return "?";
}

std::string render_template(std::string_view text, const PromptValues& values) {
  std::string out;
  out.reserve(text.size() + 256);
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const std::size_t close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string_view name = text.substr(i + 1, close - i - 1);
        const bool known = std::find(kPlaceholders.begin(), kPlaceholders.end(), name) != kPlaceholders.end();
        if (known) {
          auto it = values.find(name);
          if (it == values.end()) {
            throw PreconditionError(fmt::format("unresolved placeholder {{{}}}", name));
          }
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

PromptTemplate parse_prompt_asset(TemplateId id, std::string_view text) {
  constexpr std::string_view kSystem = "[system]";
  constexpr std::string_view kUser = "[user]";
  const std::size_t sys = text.find(kSystem);
  const std::size_t usr = text.find(kUser);
  if (sys == std::string_view::npos || usr == std::string_view::npos || usr < sys) {
    throw ConfigError(fmt::format("prompt asset '{}' needs [system] then [user] sections", to_string(id)));
  }
  PromptTemplate t;
  t.id = id;
  t.system = std::string(trim_newlines(text.substr(sys + kSystem.size(), usr - sys - kSystem.size())));
  t.user = std::string(trim_newlines(text.substr(usr + kUser.size())));
  if (t.user.empty()) throw ConfigError(fmt::format("prompt asset '{}' has an empty [user] section", to_string(id)));
  return t;
}

void PromptLibrary::load(std::string_view key, std::string_view text) {
  const auto slash = key.find('/');
  const std::string_view name = slash == std::string_view::npos ? key : key.substr(slash + 1);
  for (const auto& [id, id_name] : kTemplateNames) {
    if (id_name == name) {
      templates_.insert_or_assign(std::string(key), parse_prompt_asset(id, text));
      return;
    }
  }
  throw ConfigError(fmt::format("unknown prompt template '{}'", key));
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary library = [] {
    PromptLibrary lib;
    for (const auto& [key, text] : detail::builtin_prompt_assets()) lib.load(key, text);
    return lib;
  }();
  return library;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  PromptLibrary lib = builtin();
  if (!fs::is_directory(dir)) throw ConfigError(fmt::format("prompt directory {} does not exist", dir.string()));
  for (const auto& lang_dir : fs::directory_iterator(dir)) {
    if (!lang_dir.is_directory()) continue;
    for (const auto& file : fs::directory_iterator(lang_dir.path())) {
      if (file.path().extension() != ".txt") continue;
      const std::string key = lang_dir.path().filename().string() + "/" + file.path().stem().string();
      lib.load(key, read_text(file.path()));
    }
  }
  return lib;
}

const PromptTemplate& PromptLibrary::get(TemplateId id, Language language) const {
  auto it = templates_.find(key_for(id, language));
  if (it == templates_.end()) {
    throw ConfigError(fmt::format("no prompt template {}", key_for(id, language)));
  }
  return it->second;
}

std::string turn_abstract(const DebateTurn& turn, std::size_t max_chars) {
  std::string_view text = turn.text;
  if (auto nl = text.find('\n'); nl != std::string_view::npos) text = text.substr(0, nl);
  std::string_view head = utf8_prefix(text, max_chars);
  return fmt::format("[Turn {}] {} {}: {}{}", turn.turn_index, team_name(turn.stance), display_name(turn.role), head,
                     head.size() < turn.text.size() ? "..." : "");
}

std::string render_history(std::span<const DebateTurn> turns, std::size_t budget_chars, Language language) {
  if (turns.empty()) return language == Language::Cn ? "（无）" : "(none)";
  std::vector<std::string> blocks;
  blocks.reserve(turns.size());
  std::size_t total = 0;
  for (const auto& t : turns) {
    blocks.push_back(render_full_turn(t));
    total += blocks.back().size() + 2;
  }
  for (std::size_t i = 0; i < turns.size() && total > budget_chars; ++i) {
    std::string abstract = turn_abstract(turns[i]);
    total -= blocks[i].size();
    total += abstract.size();
    blocks[i] = std::move(abstract);
  }
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += blocks[i];
  }
  return out;
}

}  // namespace veridebate
